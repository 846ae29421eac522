#pragma once

// Corpus loading, the synthetic toy corpus, train/test splitting, and
// embedding-table loading and initialization.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sentrav/errors.hpp"
#include "sentrav/numerics.hpp"
#include "sentrav/rng.hpp"
#include "sentrav/vocab.hpp"

namespace sentrav {

struct Example {
    std::vector<int> tokens; // token ids, unpadded
    int label = 0;           // 0 = negative, 1 = positive
    std::string text;        // original raw text
};

struct Corpus {
    std::vector<Example> examples;
    std::string split = "train";

    std::size_t size() const { return examples.size(); }
};

enum class VocabMode { grow, frozen };

namespace detail {

inline Example make_example(const std::string& text, int label, Vocabulary& vocab, VocabMode mode) {
    Example ex;
    ex.text = text;
    ex.label = label;
    for (const auto& tok : tokenize(text))
        ex.tokens.push_back(mode == VocabMode::grow ? vocab.add(tok) : vocab.id_of(tok));
    return ex;
}

} // namespace detail

struct LoadStats {
    std::size_t parsed = 0;
    std::size_t skipped = 0;
};

// Lines of `text<TAB>{0|1}`. Malformed lines are counted, reported on
// stderr, and skipped; zero parsed lines is a format error.
inline Corpus load_corpus_tsv(const std::string& path, Vocabulary& vocab,
                              VocabMode mode = VocabMode::grow, LoadStats* stats = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("load_corpus_tsv: cannot open " + path);
    Corpus corpus;
    LoadStats local;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.rfind('\t');
        bool ok = tab != std::string::npos && tab + 2 == line.size() &&
                  (line[tab + 1] == '0' || line[tab + 1] == '1');
        if (!ok) {
            ++local.skipped;
            continue;
        }
        corpus.examples.push_back(
            detail::make_example(line.substr(0, tab), line[tab + 1] - '0', vocab, mode));
        ++local.parsed;
    }
    if (local.skipped > 0)
        std::cerr << "load_corpus_tsv: skipped " << local.skipped << " malformed line(s) in "
                  << path << "\n";
    if (local.parsed == 0) throw FormatError("load_corpus_tsv: no parsable examples in " + path);
    if (stats) *stats = local;
    return corpus;
}

// One sentence per line; pos_path lines get label 1, neg_path lines label 0.
inline Corpus load_corpus_pos_neg(const std::string& pos_path, const std::string& neg_path,
                                  Vocabulary& vocab, VocabMode mode = VocabMode::grow) {
    Corpus corpus;
    auto load_one = [&](const std::string& path, int label) {
        std::ifstream in(path);
        if (!in) throw IoError("load_corpus_pos_neg: cannot open " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            corpus.examples.push_back(detail::make_example(line, label, vocab, mode));
        }
    };
    load_one(pos_path, 1);
    load_one(neg_path, 0);
    if (corpus.examples.empty())
        throw FormatError("load_corpus_pos_neg: no examples in " + pos_path + " / " + neg_path);
    return corpus;
}

// ---------------------------------------------------------------------------
// Synthetic toy corpus: 2 topics x 2 sentiments, disjoint sentiment lexicons
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& toy_positive_lexicon() {
    static const std::vector<std::string> words = {"good",      "great",   "wonderful",
                                                   "excellent", "amazing", "love",
                                                   "fantastic", "nice"};
    return words;
}

inline const std::vector<std::string>& toy_negative_lexicon() {
    static const std::vector<std::string> words = {"bad",    "terrible", "awful", "boring",
                                                   "horrible", "hate",   "poor",  "dull"};
    return words;
}

inline const std::vector<std::string>& toy_topics() {
    static const std::vector<std::string> topics = {"movie", "phone"};
    return topics;
}

// Context words tied to each topic, mirroring how review domains differ in
// vocabulary beyond the topic keyword itself.
inline const std::vector<std::string>& toy_topic_context(const std::string& topic) {
    static const std::vector<std::string> movie_ctx = {"acting", "plot", "scenes", "story",
                                                       "cast"};
    static const std::vector<std::string> phone_ctx = {"battery", "screen", "camera", "calls",
                                                       "apps"};
    return topic == "movie" ? movie_ctx : phone_ctx;
}

// Deterministic sentences, lengths 4-8 tokens, every sentence contains its
// topic word and at least one word from its sentiment lexicon.
inline std::vector<std::pair<std::string, int>> generate_toy_sentences(std::uint64_t seed,
                                                                       std::size_t n_per_cell) {
    if (n_per_cell < 1) throw InputError("generate_toy_sentences: n_per_cell must be >= 1");
    Rng rng(derive_seed(seed, 0x70Cull));
    std::vector<std::pair<std::string, int>> out;
    for (const auto& topic : toy_topics()) {
        const auto& ctx_words = toy_topic_context(topic);
        for (int label = 0; label <= 1; ++label) {
            const auto& lex = label == 1 ? toy_positive_lexicon() : toy_negative_lexicon();
            for (std::size_t i = 0; i < n_per_cell; ++i) {
                const std::string a = lex[rng.below(lex.size())];
                const std::string b = lex[rng.below(lex.size())];
                const std::string c = ctx_words[rng.below(ctx_words.size())];
                std::string s;
                switch (rng.below(8)) {
                    case 0: s = "this " + topic + " is really " + a; break;
                    case 1: s = "i think this " + topic + " is " + a; break;
                    case 2: s = "the " + c + " of the " + topic + " was " + a; break;
                    case 3: s = "what a " + a + " " + topic + " " + c; break;
                    case 4: s = "this " + topic + " is " + a + " with " + b + " " + c; break;
                    case 5: s = "truly a " + a + " " + topic + " with " + a + " " + c; break;
                    case 6: s = "the " + c + " of this " + topic + " is " + a; break;
                    case 7: s = a + " " + topic + " with " + b + " " + c; break;
                }
                out.emplace_back(s, label);
            }
        }
    }
    return out;
}

// Toy corpus as indexed examples; grows `vocab` with the toy lexicon.
inline Corpus generate_toy_corpus(std::uint64_t seed, std::size_t n_per_cell, Vocabulary& vocab) {
    Corpus corpus;
    for (const auto& [text, label] : generate_toy_sentences(seed, n_per_cell))
        corpus.examples.push_back(detail::make_example(text, label, vocab, VocabMode::grow));
    return corpus;
}

// ---------------------------------------------------------------------------
// Train/test split
// ---------------------------------------------------------------------------

struct SplitCorpus {
    Corpus train;
    Corpus test;
};

// Seeded random split; round(test_fraction * n) examples go to the test set
// (at least 1 when the corpus has more than one example).
inline SplitCorpus split_corpus(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
    if (corpus.examples.empty()) throw InputError("split_corpus: empty corpus");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw InputError("split_corpus: test_fraction must be in [0,1)");
    Rng rng(derive_seed(seed, 0x5B117ull));
    const auto idx = rng.shuffled_indices(corpus.examples.size());
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(corpus.examples.size())));
    if (test_fraction > 0.0 && corpus.examples.size() > 1 && n_test == 0) n_test = 1;

    SplitCorpus split;
    split.train.split = "train";
    split.test.split = "test";
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i < n_test)
            split.test.examples.push_back(corpus.examples[idx[i]]);
        else
            split.train.examples.push_back(corpus.examples[idx[i]]);
    }
    return split;
}

// ---------------------------------------------------------------------------
// Embedding tables
// ---------------------------------------------------------------------------

// Normal(0, scale) rows, PAD row pinned to zero.
inline Matrix init_embeddings_random(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed,
                                     double scale = 0.1) {
    if (dim < 1) throw InputError("init_embeddings_random: dim must be >= 1");
    Rng rng(derive_seed(seed, 0xE3BEDull));
    Matrix e(vocab.size(), dim);
    for (double& x : e.data) x = rng.normal(0.0, scale);
    for (std::size_t j = 0; j < dim; ++j) e(Vocabulary::pad_id, j) = 0.0;
    return e;
}

// Text format: one line per word, `word v1 v2 ... vd`. Words absent from the
// file get Normal(0, 0.1) rows; the PAD row is always zero. Inconsistent
// dimensions are a format error.
inline Matrix load_embeddings_text(const std::string& path, const Vocabulary& vocab,
                                   std::uint64_t seed = 0) {
    std::ifstream in(path);
    if (!in) throw IoError("load_embeddings_text: cannot open " + path);

    std::vector<std::pair<int, Vector>> rows;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        Vector vals;
        double v;
        while (ls >> v) vals.push_back(v);
        if (vals.empty())
            throw FormatError("load_embeddings_text: no values on line " + std::to_string(line_no));
        if (dim == 0)
            dim = vals.size();
        else if (vals.size() != dim)
            throw FormatError("load_embeddings_text: dimension mismatch on line " +
                              std::to_string(line_no));
        if (vocab.contains(word)) rows.emplace_back(vocab.id_of(word), std::move(vals));
    }
    if (dim == 0) throw FormatError("load_embeddings_text: empty file " + path);

    Matrix e = init_embeddings_random(vocab, dim, seed);
    for (const auto& [id, vals] : rows)
        for (std::size_t j = 0; j < dim; ++j) e(static_cast<std::size_t>(id), j) = vals[j];
    for (std::size_t j = 0; j < dim; ++j) e(Vocabulary::pad_id, j) = 0.0;
    return e;
}

} // namespace sentrav
