// Command-line front end: toy-corpus generation, training, sentence
// transformation, cluster diagnostics export, and checkpoint evaluation.
//
// Exit codes: 0 success, 1 usage, 2 I/O or file format, 3 training or
// optimization failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sentrav/sentrav.hpp"

namespace {

using namespace sentrav;

struct TrainArgs {
    std::string corpus_path;
    std::string pos_path, neg_path;
    std::string out_path;
    std::string embeddings_path;
    std::size_t embed_dim = 16;
    std::size_t filters_per_height = 8;
    std::vector<std::size_t> heights = {1, 2, 3, 4};
    std::string activation = "relu";
    std::size_t max_len = 30;
    std::size_t phase1 = 200, phase2 = 150, retrain = 14;
    std::size_t batch = 64;
    double lr = 1e-3;
    std::string optimizer = "adam";
    std::uint64_t seed = 7;
    double test_fraction = 0.1;
    double lambda = 7e-5;
    double sigma = 0.0;
    std::size_t set_size = 90;
    bool quiet = false;
};

struct TransformArgs {
    std::string checkpoint_path;
    std::string corpus_path;
    std::vector<std::string> sentences;
    std::string input_path;
    std::string report_path;
    double lambda = 7e-5;
    double sigma = 0.0;
    std::size_t set_size = 90;
    std::uint64_t seed = 7;
    bool use_gold_labels = false;
    std::string to_direction; // "", "pos", "neg"
    bool lambda_set = false, sigma_set = false, set_size_set = false;
};

struct VisualizeArgs {
    std::string checkpoint_path;
    std::string corpus_path;
    std::string out_path;
    std::vector<std::string> topics = {"movie", "phone"};
    double lambda = 7e-5;
    double sigma = 0.0;
    std::size_t set_size = 90;
    std::uint64_t seed = 7;
    bool use_gold_labels = false;
    bool lambda_set = false, sigma_set = false, set_size_set = false;
};

void print_defaults_banner() {
    std::cerr << "defaults: lambda=7e-05 sigma=median set_size=90 batch=64 max_len=30\n";
}

int cmd_gen_toy(std::uint64_t seed, std::size_t n_per_cell, const std::string& out_path) {
    if (n_per_cell == 0) throw UsageError("gen-toy: --n must be >= 1");
    const auto sentences = generate_toy_sentences(seed, n_per_cell);
    std::string tsv;
    std::size_t n_pos = 0;
    for (const auto& [text, label] : sentences) {
        tsv += text;
        tsv += '\t';
        tsv += static_cast<char>('0' + label);
        tsv += '\n';
        n_pos += static_cast<std::size_t>(label);
    }
    write_file_atomic(out_path, tsv);
    std::cout << "wrote " << sentences.size() << " sentences (" << n_pos << " positive, "
              << sentences.size() - n_pos << " negative) to " << out_path << "\n";
    return 0;
}

int cmd_train(const TrainArgs& args) {
    Vocabulary vocab;
    Corpus corpus;
    if (!args.corpus_path.empty()) {
        corpus = load_corpus_tsv(args.corpus_path, vocab);
    } else if (!args.pos_path.empty() && !args.neg_path.empty()) {
        corpus = load_corpus_pos_neg(args.pos_path, args.neg_path, vocab);
    } else {
        throw UsageError("train: provide --corpus or both --pos and --neg");
    }

    EncoderConfig enc_cfg;
    enc_cfg.embed_dim = args.embed_dim;
    enc_cfg.filter_heights = args.heights;
    enc_cfg.filters_per_height = args.filters_per_height;
    enc_cfg.activation = activation_from_name(args.activation);
    DecoderConfig dec_cfg;
    dec_cfg.state_dim = enc_cfg.feature_dim();
    dec_cfg.embed_dim = args.embed_dim;
    dec_cfg.max_len = args.max_len;

    Model model = init_model(vocab, enc_cfg, dec_cfg, args.seed);
    if (!args.embeddings_path.empty()) {
        model.embeddings = load_embeddings_text(args.embeddings_path, vocab, args.seed);
        if (model.embeddings.cols != enc_cfg.embed_dim)
            throw InputError("train: embedding file dimension " +
                             std::to_string(model.embeddings.cols) + " != --embed-dim " +
                             std::to_string(enc_cfg.embed_dim));
    }

    TrainPlan plan;
    plan.phase1_epochs = args.phase1;
    plan.phase2_epochs = args.phase2;
    plan.retrain_epochs = args.retrain;
    plan.batch_size = args.batch;
    plan.seed = args.seed;
    plan.optimizer.learning_rate = args.lr;
    plan.optimizer.batch_size = args.batch;
    plan.optimizer.seed = args.seed;
    plan.optimizer.kind = args.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;

    const SplitCorpus split = split_corpus(corpus, args.test_fraction, args.seed);
    std::cout << "corpus: " << corpus.size() << " examples, vocab " << vocab.size()
              << ", train " << split.train.size() << ", test " << split.test.size() << "\n";

    const TrainSummary summary =
        train_full(split.train, split.test, model, plan, args.quiet ? nullptr : &std::cout);

    Checkpoint ck;
    ck.model = std::move(model);
    ck.default_lambda = args.lambda;
    ck.default_sigma = args.sigma;
    ck.default_set_size = static_cast<std::uint32_t>(args.set_size);
    ck.meta.phase1_epochs = static_cast<std::uint32_t>(plan.phase1_epochs);
    ck.meta.phase2_epochs = static_cast<std::uint32_t>(plan.phase2_epochs);
    ck.meta.retrain_epochs = static_cast<std::uint32_t>(plan.retrain_epochs);
    ck.meta.seed = args.seed;
    ck.meta.final_test_accuracy = summary.final_test.classification_accuracy;
    ck.meta.final_recon_token_accuracy = summary.final_train.reconstruction_token_accuracy;
    ck.meta.phase1_loss_curve = summary.phase1.epoch_losses;
    save_checkpoint(args.out_path, ck);

    std::printf("final: test accuracy %.4f, train reconstruction token accuracy %.4f\n",
                summary.final_test.classification_accuracy,
                summary.final_train.reconstruction_token_accuracy);
    std::cout << "checkpoint written to " << args.out_path << "\n";
    return 0;
}

std::vector<std::string> gather_transform_inputs(const TransformArgs& args) {
    std::vector<std::string> inputs = args.sentences;
    if (!args.input_path.empty()) {
        std::ifstream in(args.input_path);
        if (!in) throw IoError("transform: cannot open " + args.input_path);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) inputs.push_back(line);
    }
    if (inputs.empty()) {
        std::string line;
        while (std::getline(std::cin, line))
            if (!line.empty()) inputs.push_back(line);
    }
    if (inputs.empty()) throw UsageError("transform: no input sentences");
    return inputs;
}

int cmd_transform(const TransformArgs& args) {
    const Checkpoint ck = load_checkpoint(args.checkpoint_path);
    if (args.corpus_path.empty())
        throw UsageError("transform: --corpus is required to build example sets");
    Vocabulary vocab = ck.model.vocab;
    const Corpus corpus = load_corpus_tsv(args.corpus_path, vocab, VocabMode::frozen);

    TransformOptions opts;
    opts.lambda = args.lambda_set ? args.lambda : ck.default_lambda;
    opts.sigma = args.sigma_set ? args.sigma : ck.default_sigma;
    opts.set_size = args.set_size_set ? args.set_size : ck.default_set_size;
    opts.seed = args.seed;
    opts.use_gold_labels = args.use_gold_labels;
    if (args.to_direction == "pos")
        opts.force_target = 1;
    else if (args.to_direction == "neg")
        opts.force_target = 0;
    else if (!args.to_direction.empty())
        throw UsageError("transform: --to must be pos or neg");

    const auto encoded = encode_corpus(ck.model, corpus);
    const ExamplePools pools =
        build_example_pools(encoded, opts.set_size, opts.seed, opts.use_gold_labels);

    const auto inputs = gather_transform_inputs(args);
    std::string report_csv = traversal_report_csv_header() + "\n";
    for (const auto& text : inputs) {
        const TransformResult r = transform_sentence(ck.model, pools, text, opts);
        std::cout << "original: " << r.original << "\n";
        std::cout << "from z: " << r.reconstruction << "\n";
        std::cout << "from z*: " << r.transformed << "\n";
        std::printf("traversal: %s -> %s, witness %.6f -> %.6f, displacement %.6f, iterations %zu\n\n",
                    r.predicted_label == 1 ? "pos" : "neg", r.target_label == 1 ? "pos" : "neg",
                    r.report.witness_before, r.report.witness_after, r.report.displacement_norm,
                    r.report.iterations);
        report_csv += traversal_report_csv_row(r.report) + "\n";
    }
    if (!args.report_path.empty()) write_file_atomic(args.report_path, report_csv);
    return 0;
}

int cmd_visualize(const VisualizeArgs& args) {
    const Checkpoint ck = load_checkpoint(args.checkpoint_path);
    Vocabulary vocab = ck.model.vocab;
    const Corpus corpus = load_corpus_tsv(args.corpus_path, vocab, VocabMode::frozen);

    TransformOptions opts;
    opts.lambda = args.lambda_set ? args.lambda : ck.default_lambda;
    opts.sigma = args.sigma_set ? args.sigma : ck.default_sigma;
    opts.set_size = args.set_size_set ? args.set_size : ck.default_set_size;
    opts.seed = args.seed;
    opts.use_gold_labels = args.use_gold_labels;

    const TraversalStudy study = run_traversal_study(ck.model, corpus, args.topics, opts);
    write_file_atomic(args.out_path, study_to_csv(study));
    std::cout << "examples " << study.pool_examples.size() << ", traversed "
              << study.traversed.size() << ", sigma " << study.sigma << ", lambda "
              << study.lambda << "\n";
    std::cout << "csv written to " << args.out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& corpus_path) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    Vocabulary vocab = ck.model.vocab;
    const Corpus corpus = load_corpus_tsv(corpus_path, vocab, VocabMode::frozen);
    const EvalMetrics m = evaluate(corpus, ck.model);
    std::cout << "examples " << corpus.size() << "\n";
    std::printf("classification_accuracy %.6f\n", m.classification_accuracy);
    std::printf("reconstruction_token_accuracy %.6f\n", m.reconstruction_token_accuracy);
    std::printf("mean_reconstruction_loss %.6f\n", m.mean_reconstruction_loss);
    std::printf("mean_classification_loss %.6f\n", m.mean_classification_loss);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentiment transformation via latent-space traversal"};
    app.require_subcommand(1);

    // gen-toy
    auto* gen = app.add_subcommand("gen-toy", "generate the synthetic toy corpus as TSV");
    std::uint64_t gen_seed = 7;
    std::size_t gen_n = 25;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--n", gen_n, "sentences per topic/sentiment cell");
    gen->add_option("--out", gen_out, "output TSV path")->required();

    // train
    auto* train = app.add_subcommand("train", "train encoder + decoder and write a checkpoint");
    TrainArgs ta;
    train->add_option("--corpus", ta.corpus_path, "TSV corpus (text<TAB>{0|1})");
    train->add_option("--pos", ta.pos_path, "positive sentences, one per line");
    train->add_option("--neg", ta.neg_path, "negative sentences, one per line");
    train->add_option("--out", ta.out_path, "checkpoint output path")->required();
    train->add_option("--embeddings", ta.embeddings_path, "pretrained embedding text file");
    train->add_option("--embed-dim", ta.embed_dim, "word embedding dimension");
    train->add_option("--filters", ta.filters_per_height, "filters per height");
    train->add_option("--heights", ta.heights, "convolution filter heights");
    train->add_option("--activation", ta.activation, "relu|tanh|identity");
    train->add_option("--max-len", ta.max_len, "sentence padding length");
    train->add_option("--phase1", ta.phase1, "reconstruction-only epochs");
    train->add_option("--phase2", ta.phase2, "joint-training epochs");
    train->add_option("--retrain", ta.retrain, "decoder retraining epochs");
    train->add_option("--batch", ta.batch, "batch size");
    train->add_option("--lr", ta.lr, "learning rate");
    train->add_option("--optimizer", ta.optimizer, "adam|sgd");
    train->add_option("--seed", ta.seed, "seed for init, split, and batching");
    train->add_option("--test-fraction", ta.test_fraction, "held-out fraction");
    train->add_option("--lambda", ta.lambda, "default budget stored in the checkpoint");
    train->add_option("--sigma", ta.sigma, "default bandwidth stored in the checkpoint (0 = median)");
    train->add_option("--set-size", ta.set_size, "default example-set size stored in the checkpoint");
    train->add_flag("--quiet", ta.quiet, "suppress progress lines");

    // transform
    auto* trans = app.add_subcommand("transform", "flip the sentiment of input sentences");
    TransformArgs xa;
    trans->add_option("--checkpoint", xa.checkpoint_path, "trained checkpoint")->required();
    trans->add_option("--corpus", xa.corpus_path, "corpus for source/target example sets");
    trans->add_option("--sentence", xa.sentences, "input sentence (repeatable)");
    trans->add_option("--input", xa.input_path, "file with one sentence per line");
    trans->add_option("--report", xa.report_path, "write traversal reports to this CSV");
    auto* xl = trans->add_option("--lambda", xa.lambda, "budget of change");
    auto* xs = trans->add_option("--sigma", xa.sigma, "kernel bandwidth (0 = median heuristic)");
    auto* xz = trans->add_option("--set-size", xa.set_size, "example-set size per sentiment");
    trans->add_option("--seed", xa.seed, "seed for example-set sampling");
    trans->add_flag("--use-gold-labels", xa.use_gold_labels,
                    "select example sets by gold labels instead of predicted");
    trans->add_option("--to", xa.to_direction, "force direction: pos or neg");

    // visualize
    auto* vis = app.add_subcommand("visualize", "export traversal diagnostics as a PCA CSV");
    VisualizeArgs va;
    vis->add_option("--checkpoint", va.checkpoint_path, "trained checkpoint")->required();
    vis->add_option("--corpus", va.corpus_path, "corpus to encode")->required();
    vis->add_option("--out", va.out_path, "output CSV path")->required();
    vis->add_option("--topics", va.topics, "two topic keywords");
    auto* vl = vis->add_option("--lambda", va.lambda, "budget of change");
    auto* vs = vis->add_option("--sigma", va.sigma, "kernel bandwidth (0 = median heuristic)");
    auto* vz = vis->add_option("--set-size", va.set_size, "example-set size per sentiment");
    vis->add_option("--seed", va.seed, "seed for example-set sampling");
    vis->add_flag("--use-gold-labels", va.use_gold_labels,
                  "select example sets by gold labels instead of predicted");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
    std::string eval_ckpt, eval_corpus;
    ev->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
    ev->add_option("--corpus", eval_corpus, "TSV corpus")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }

    print_defaults_banner();

    try {
        if (gen->parsed()) return cmd_gen_toy(gen_seed, gen_n, gen_out);
        if (train->parsed()) return cmd_train(ta);
        if (trans->parsed()) {
            xa.lambda_set = xl->count() > 0;
            xa.sigma_set = xs->count() > 0;
            xa.set_size_set = xz->count() > 0;
            return cmd_transform(xa);
        }
        if (vis->parsed()) {
            va.lambda_set = vl->count() > 0;
            va.sigma_set = vs->count() > 0;
            va.set_size_set = vz->count() > 0;
            return cmd_visualize(va);
        }
        if (ev->parsed()) return cmd_eval(eval_ckpt, eval_corpus);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const TrainError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 3;
    } catch (const OptimError& e) {
        std::cerr << "optimization error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
