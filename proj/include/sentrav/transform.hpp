#pragma once

// End-to-end sentence transformation: encode, build source/target example
// sets from corpus encodings, traverse, decode. Also the topic-traversal
// study behind the `visualize` command.

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "sentrav/decoder.hpp"
#include "sentrav/encoder.hpp"
#include "sentrav/errors.hpp"
#include "sentrav/kernels.hpp"
#include "sentrav/model.hpp"
#include "sentrav/pca.hpp"
#include "sentrav/rng.hpp"
#include "sentrav/traversal.hpp"
#include "sentrav/vocab.hpp"

namespace sentrav {

struct EncodedExample {
    std::size_t index = 0; // position in the corpus
    Vector z;
    int gold_label = 0;
    int predicted_label = 0;
    std::string topic; // first matching topic keyword, empty if none
};

inline std::string topic_of_tokens(const std::vector<int>& ids, const Vocabulary& vocab,
                                   const std::vector<std::string>& topics) {
    for (int id : ids) {
        const std::string& tok = vocab.token_of(id);
        for (const auto& t : topics)
            if (tok == t) return t;
    }
    return {};
}

inline std::vector<EncodedExample> encode_corpus(const Model& model, const Corpus& corpus,
                                                 const std::vector<std::string>& topics = {}) {
    std::vector<EncodedExample> out;
    out.reserve(corpus.examples.size());
    for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
        const Example& ex = corpus.examples[i];
        const PaddedSentence padded = pad_ids(ex.tokens, model.dec_cfg.max_len);
        const Encoding enc = encode(padded.encoder_ids, model.embeddings, model.enc, model.enc_cfg);
        EncodedExample ee;
        ee.index = i;
        ee.z = enc.z;
        ee.gold_label = ex.label;
        ee.predicted_label = enc.predicted_label;
        if (!topics.empty()) ee.topic = topic_of_tokens(ex.tokens, model.vocab, topics);
        out.push_back(std::move(ee));
    }
    return out;
}

// Positive and negative example pools used as traversal source/target sets.
struct ExamplePools {
    SampleSet positive;
    SampleSet negative;
    // indices into the encoded-example list, parallel to the pools
    std::vector<std::size_t> positive_members;
    std::vector<std::size_t> negative_members;
};

// Samples up to set_size vectors per label (seeded, without replacement).
// With topic_balanced, each pool takes an equal share per topic. Labels are
// the encoder's own predictions unless use_gold_labels is set.
inline ExamplePools build_example_pools(const std::vector<EncodedExample>& encoded,
                                        std::size_t set_size, std::uint64_t seed,
                                        bool use_gold_labels = false,
                                        const std::vector<std::string>& balance_topics = {}) {
    if (set_size < 1) throw InputError("build_example_pools: set_size must be >= 1");
    ExamplePools pools;

    auto label_of = [&](const EncodedExample& e) {
        return use_gold_labels ? e.gold_label : e.predicted_label;
    };

    for (int label = 0; label <= 1; ++label) {
        std::vector<std::vector<std::size_t>> buckets;
        if (balance_topics.empty()) {
            buckets.emplace_back();
            for (std::size_t i = 0; i < encoded.size(); ++i)
                if (label_of(encoded[i]) == label) buckets[0].push_back(i);
        } else {
            buckets.resize(balance_topics.size());
            for (std::size_t i = 0; i < encoded.size(); ++i) {
                if (label_of(encoded[i]) != label) continue;
                for (std::size_t t = 0; t < balance_topics.size(); ++t)
                    if (encoded[i].topic == balance_topics[t]) {
                        buckets[t].push_back(i);
                        break;
                    }
            }
        }

        Rng rng(derive_seed(seed, 0xB00C5ull + static_cast<std::uint64_t>(label)));
        std::vector<std::size_t> chosen;
        const std::size_t per_bucket =
            std::max<std::size_t>(1, set_size / std::max<std::size_t>(1, buckets.size()));
        for (auto& bucket : buckets) {
            const auto order = rng.shuffled_indices(bucket.size());
            for (std::size_t i = 0; i < bucket.size() && i < per_bucket; ++i)
                chosen.push_back(bucket[order[i]]);
        }
        if (chosen.empty())
            throw InputError("build_example_pools: no examples with label " +
                             std::to_string(label));

        auto& pool = label == 1 ? pools.positive : pools.negative;
        auto& members = label == 1 ? pools.positive_members : pools.negative_members;
        for (std::size_t ix : chosen) {
            pool.points.push_back(encoded[ix].z);
            members.push_back(ix);
        }
    }
    return pools;
}

struct TransformOptions {
    double lambda = 7e-5;
    double sigma = 0.0; // 0: median heuristic over source + target
    std::size_t set_size = 90;
    std::uint64_t seed = 7;
    bool use_gold_labels = false;
    std::optional<int> force_target; // force traversal direction (0 or 1)
    BfgsConfig bfgs;
};

inline double resolve_sigma(const TransformOptions& opts, const SampleSet& source,
                            const SampleSet& target) {
    if (opts.sigma > 0.0) return opts.sigma;
    SampleSet merged;
    merged.points = source.points;
    merged.points.insert(merged.points.end(), target.points.begin(), target.points.end());
    return median_heuristic_sigma(merged);
}

struct TransformResult {
    std::string original;
    int predicted_label = 0; // encoder's label for the input
    int target_label = 0;    // sentiment traversed toward
    std::vector<int> reconstruction_ids; // greedy decode of z
    std::vector<int> transformed_ids;    // greedy decode of z_star
    std::string reconstruction;
    std::string transformed;
    Vector z;
    Vector z_star;
    TraversalReport report;
};

inline TransformResult transform_sentence(const Model& model, const ExamplePools& pools,
                                          const std::string& text, const TransformOptions& opts) {
    const Encoding enc = encode_text(model, text);

    TransformResult result;
    result.original = text;
    result.predicted_label = enc.predicted_label;
    result.target_label = opts.force_target ? *opts.force_target : 1 - enc.predicted_label;
    if (result.target_label != 0 && result.target_label != 1)
        throw InputError("transform_sentence: target label must be 0 or 1");

    const SampleSet& target_set = result.target_label == 1 ? pools.positive : pools.negative;
    const SampleSet& source_set = result.target_label == 1 ? pools.negative : pools.positive;

    TraversalProblem problem;
    problem.z = enc.z;
    problem.source = source_set;
    problem.target = target_set;
    problem.lambda = opts.lambda;
    problem.kernel.sigma = resolve_sigma(opts, source_set, target_set);

    const TraversalResult traversed = traverse(problem, opts.bfgs);
    result.z = enc.z;
    result.z_star = traversed.z_star;
    result.report = traversal_report(traversed);

    result.reconstruction_ids =
        decode_greedy(enc.z, model.dec, model.dec_cfg, model.embeddings, model.vocab);
    result.transformed_ids =
        decode_greedy(traversed.z_star, model.dec, model.dec_cfg, model.embeddings, model.vocab);
    result.reconstruction = model.vocab.detokenize(result.reconstruction_ids);
    result.transformed = model.vocab.detokenize(result.transformed_ids);
    return result;
}

// ---------------------------------------------------------------------------
// Topic traversal study (the `visualize` command)
// ---------------------------------------------------------------------------

struct StudyVector {
    std::size_t corpus_index = 0;
    std::string topic;
    int from_label = 0;
    int to_label = 0;
    Vector z;
    Vector z_star;
    TraversalReport report;
};

struct TraversalStudy {
    std::vector<EncodedExample> pool_examples; // the example vectors (both pools)
    std::vector<StudyVector> traversed;
    double sigma = 0.0;
    double lambda = 0.0;
};

// Traverses negative sentences of topics[0] toward positive and positive
// sentences of topics[1] toward negative, against topic-balanced example
// pools; the standard two-topic diagnostic layout.
inline TraversalStudy run_traversal_study(const Model& model, const Corpus& corpus,
                                          const std::vector<std::string>& topics,
                                          const TransformOptions& opts) {
    if (topics.size() < 2) throw InputError("run_traversal_study: need two topic keywords");
    const std::vector<EncodedExample> encoded = encode_corpus(model, corpus, topics);

    bool any_topic = false;
    for (const auto& e : encoded)
        if (!e.topic.empty()) any_topic = true;
    if (!any_topic)
        throw InputError("run_traversal_study: topic filter matches no corpus sentence");

    const ExamplePools pools =
        build_example_pools(encoded, opts.set_size, opts.seed, opts.use_gold_labels, topics);

    TraversalStudy study;
    study.lambda = opts.lambda;
    study.sigma = resolve_sigma(opts, pools.negative, pools.positive);
    for (std::size_t ix : pools.positive_members) study.pool_examples.push_back(encoded[ix]);
    for (std::size_t ix : pools.negative_members) study.pool_examples.push_back(encoded[ix]);

    auto label_of = [&](const EncodedExample& e) {
        return opts.use_gold_labels ? e.gold_label : e.predicted_label;
    };

    for (const auto& e : encoded) {
        int from_label;
        if (e.topic == topics[0] && label_of(e) == 0)
            from_label = 0;
        else if (e.topic == topics[1] && label_of(e) == 1)
            from_label = 1;
        else
            continue;

        TraversalProblem problem;
        problem.z = e.z;
        problem.source = from_label == 0 ? pools.negative : pools.positive;
        problem.target = from_label == 0 ? pools.positive : pools.negative;
        problem.lambda = opts.lambda;
        problem.kernel.sigma = study.sigma;
        const TraversalResult traversed = traverse(problem, opts.bfgs);

        StudyVector sv;
        sv.corpus_index = e.index;
        sv.topic = e.topic;
        sv.from_label = from_label;
        sv.to_label = 1 - from_label;
        sv.z = e.z;
        sv.z_star = traversed.z_star;
        sv.report = traversal_report(traversed);
        study.traversed.push_back(std::move(sv));
    }
    return study;
}

// CSV with one row per example / original / traversed point, projected onto
// the top-2 principal components of the example pool.
inline std::string study_to_csv(const TraversalStudy& study) {
    SampleSet pool;
    for (const auto& e : study.pool_examples) pool.points.push_back(e.z);
    const Projection proj = fit_pca(pool);

    std::string csv = "pc1,pc2,label,topic,kind\n";
    char buf[192];
    auto add_row = [&](const Vector& v, int label, const std::string& topic,
                       const char* kind) {
        const ProjectedPoint p = project_point(v, proj);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%s,%s,%s\n", p.pc1, p.pc2,
                      label == 1 ? "pos" : "neg", topic.empty() ? "none" : topic.c_str(), kind);
        csv += buf;
    };
    for (const auto& e : study.pool_examples) add_row(e.z, e.gold_label, e.topic, "example");
    for (const auto& t : study.traversed) {
        add_row(t.z, t.from_label, t.topic, "original");
        add_row(t.z_star, t.to_label, t.topic, "traversed");
    }
    return csv;
}

} // namespace sentrav
