#pragma once

// Two-phase training orchestration: reconstruction-only pretraining, joint
// reconstruction + classification training with periodic test evaluation,
// and a final decoder-only retraining pass against the frozen encoder.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "sentrav/corpus.hpp"
#include "sentrav/decoder.hpp"
#include "sentrav/encoder.hpp"
#include "sentrav/errors.hpp"
#include "sentrav/model.hpp"
#include "sentrav/optim.hpp"
#include "sentrav/rng.hpp"
#include "sentrav/vocab.hpp"

namespace sentrav {

struct TrainPlan {
    std::size_t phase1_epochs = 200; // reconstruction only
    std::size_t phase2_epochs = 150; // joint reconstruction + classification
    std::size_t retrain_epochs = 14; // decoder-only, encoder frozen
    std::size_t batch_size = 64;
    std::size_t eval_every = 10; // test evaluation every Nth batch in phase 2
    std::uint64_t seed = 7;
    double recon_weight = 1.0; // fixed: the total loss is an unweighted sum
    double class_weight = 1.0;
    double clip_norm = 5.0; // global gradient-norm clip, 0 disables
    SgdConfig optimizer;

    void validate() const {
        optimizer.validate();
        if (batch_size < 1) throw InputError("TrainPlan: batch_size must be >= 1");
        if (eval_every < 1) throw InputError("TrainPlan: eval_every must be >= 1");
        if (recon_weight != 1.0 || class_weight != 1.0)
            throw InputError("TrainPlan: loss weights are fixed at 1.0 (unweighted sum)");
        if (clip_norm < 0.0) throw InputError("TrainPlan: clip_norm must be >= 0");
    }
};

// Raised when training hits a non-finite loss; carries the most recent finite
// snapshot when one exists.
struct TrainError : Error {
    std::shared_ptr<const Model> last_good;
    TrainError(const std::string& msg, std::shared_ptr<const Model> snapshot)
        : Error(msg), last_good(std::move(snapshot)) {}
};

struct EvalMetrics {
    double classification_accuracy = 0.0;
    double reconstruction_token_accuracy = 0.0;
    double mean_reconstruction_loss = 0.0;
    double mean_classification_loss = 0.0;
};

struct EvalEvent {
    std::size_t batch = 0; // global 1-based batch counter
    double classification_accuracy = 0.0;
    double reconstruction_loss = 0.0;
};

struct BatchRecord {
    double reconstruction_loss = 0.0;
    double classification_loss = 0.0;
    double total_loss = 0.0;
};

struct Phase1Result {
    std::vector<double> epoch_losses; // mean reconstruction loss per epoch
};

struct Phase2Result {
    std::vector<BatchRecord> batches;
    std::vector<EvalEvent> eval_events;
    std::vector<double> epoch_losses; // mean total loss per epoch
};

inline EvalMetrics evaluate(const Corpus& corpus, const Model& model) {
    if (corpus.examples.empty()) throw InputError("evaluate: empty split");
    EvalMetrics m;
    std::size_t correct = 0, token_hits = 0, token_total = 0;
    double recon_sum = 0.0, class_sum = 0.0;
    for (const auto& ex : corpus.examples) {
        const PaddedSentence padded = pad_ids(ex.tokens, model.dec_cfg.max_len);
        const Encoding enc = encode(padded.encoder_ids, model.embeddings, model.enc, model.enc_cfg);
        if (enc.predicted_label == ex.label) ++correct;
        class_sum += softmax_cross_entropy(enc.logits, static_cast<std::size_t>(ex.label)).loss;

        const TeacherForced tf =
            decode_teacher_forced(enc.z, padded.decoder_target, model.dec, model.dec_cfg, model.embeddings);
        recon_sum += tf.loss;
        for (std::size_t t = 0; t < padded.decoder_target.size(); ++t) {
            std::size_t best = 0;
            const Vector& lg = tf.logits[t];
            for (std::size_t i = 1; i < lg.size(); ++i)
                if (lg[i] > lg[best]) best = i;
            if (static_cast<int>(best) == padded.decoder_target[t]) ++token_hits;
            ++token_total;
        }
    }
    const double n = static_cast<double>(corpus.examples.size());
    m.classification_accuracy = static_cast<double>(correct) / n;
    m.reconstruction_token_accuracy =
        static_cast<double>(token_hits) / static_cast<double>(token_total);
    m.mean_reconstruction_loss = recon_sum / n;
    m.mean_classification_loss = class_sum / n;
    return m;
}

namespace pipeline_detail {

inline void clip_gradients(Vector& flat, double clip_norm) {
    if (clip_norm <= 0.0) return;
    const double n = norm2(flat);
    if (n > clip_norm) {
        const double s = clip_norm / n;
        for (double& g : flat) g *= s;
    }
}

inline void zero_pad_row(Matrix& embedding_grads) {
    for (std::size_t j = 0; j < embedding_grads.cols; ++j)
        embedding_grads(Vocabulary::pad_id, j) = 0.0;
}

struct BatchLoss {
    double recon = 0.0;
    double cls = 0.0;
};

// Forward + backward over one batch of examples (indices into the corpus).
// Gradients are means over the batch. with_class toggles the classification
// term (phase 2).
inline BatchLoss run_batch(Model& model, ModelGrads& grads, const Corpus& corpus,
                           const std::vector<std::size_t>& order, std::size_t begin,
                           std::size_t end, bool with_class) {
    grads.clear();
    BatchLoss loss;
    const double inv_n = 1.0 / static_cast<double>(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        const Example& ex = corpus.examples[order[i]];
        const PaddedSentence padded = pad_ids(ex.tokens, model.dec_cfg.max_len);
        const Encoding enc = encode(padded.encoder_ids, model.embeddings, model.enc, model.enc_cfg);
        const TeacherForced tf = decode_teacher_forced(enc.z, padded.decoder_target, model.dec,
                                                       model.dec_cfg, model.embeddings);
        loss.recon += tf.loss * inv_n;
        const Vector d_z = decoder_backward(padded.decoder_target, model.dec, model.dec_cfg,
                                            model.embeddings, tf, inv_n, grads.dec,
                                            grads.embeddings);
        Vector d_logits(model.enc_cfg.num_classes, 0.0);
        if (with_class) {
            const SoftmaxCrossEntropy ce =
                softmax_cross_entropy(enc.logits, static_cast<std::size_t>(ex.label));
            loss.cls += ce.loss * inv_n;
            d_logits = scaled(ce.grad, inv_n);
        }
        encoder_backward(padded.encoder_ids, model.embeddings, model.enc, model.enc_cfg, enc, d_z,
                         d_logits, grads.enc, grads.embeddings);
    }
    zero_pad_row(grads.embeddings);
    return loss;
}

inline void apply_update(Model& model, ModelGrads& grads, OptimizerState& state,
                         const SgdConfig& opt, double clip_norm) {
    auto pviews = param_views(model);
    auto gviews = grad_views(grads);
    Vector flat_p = flatten(pviews);
    Vector flat_g = flatten(gviews);
    clip_gradients(flat_g, clip_norm);
    sgd_step(flat_p, flat_g, state, opt);
    unflatten(flat_p, pviews);
}

inline std::shared_ptr<const Model> snapshot(const Model& m) {
    return std::make_shared<const Model>(m);
}

inline void progress_line(std::ostream* out, std::size_t epoch, std::size_t batch, double recon,
                          double cls, double acc) {
    if (!out) return;
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %zu batch %zu recon %.6f class %.6f acc %.4f", epoch,
                  batch, recon, cls, acc);
    (*out) << buf << "\n";
}

} // namespace pipeline_detail

// Phase 1: reconstruction-only training of encoder + decoder (labels unused).
inline Phase1Result train_phase1(const Corpus& corpus, Model& model, const TrainPlan& plan,
                                 std::ostream* progress = nullptr) {
    plan.validate();
    model.validate();
    if (corpus.examples.empty()) throw InputError("train_phase1: empty corpus");

    Phase1Result result;
    ModelGrads grads = ModelGrads::zeros(model);
    OptimizerState state;
    Rng order_rng(derive_seed(plan.seed, 0x9A5E1ull));
    std::shared_ptr<const Model> last_good = pipeline_detail::snapshot(model);

    std::size_t global_batch = 0;
    for (std::size_t epoch = 1; epoch <= plan.phase1_epochs; ++epoch) {
        const auto order = order_rng.shuffled_indices(corpus.examples.size());
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += plan.batch_size) {
            const std::size_t end = std::min(begin + plan.batch_size, order.size());
            const auto loss =
                pipeline_detail::run_batch(model, grads, corpus, order, begin, end, false);
            if (!std::isfinite(loss.recon))
                throw TrainError("train_phase1: non-finite loss at epoch " + std::to_string(epoch),
                                 last_good);
            pipeline_detail::apply_update(model, grads, state, plan.optimizer, plan.clip_norm);
            epoch_loss += loss.recon * static_cast<double>(end - begin);
            ++n_batches;
            ++global_batch;
        }
        epoch_loss /= static_cast<double>(order.size());
        result.epoch_losses.push_back(epoch_loss);
        pipeline_detail::progress_line(progress, epoch, global_batch, epoch_loss, 0.0, 0.0);
        last_good = pipeline_detail::snapshot(model);
    }
    return result;
}

// Phase 2: joint training; total loss per sentence is reconstruction CE plus
// classification CE (both weighted 1.0). Evaluates on the test split every
// plan.eval_every batches.
inline Phase2Result train_phase2(const Corpus& train, const Corpus& test, Model& model,
                                 const TrainPlan& plan, std::ostream* progress = nullptr) {
    plan.validate();
    model.validate();
    if (train.examples.empty()) throw InputError("train_phase2: empty corpus");

    Phase2Result result;
    ModelGrads grads = ModelGrads::zeros(model);
    OptimizerState state;
    Rng order_rng(derive_seed(plan.seed, 0x9A5E2ull));
    std::shared_ptr<const Model> last_good = pipeline_detail::snapshot(model);
    double last_acc = 0.0;

    std::size_t global_batch = 0;
    for (std::size_t epoch = 1; epoch <= plan.phase2_epochs; ++epoch) {
        const auto order = order_rng.shuffled_indices(train.examples.size());
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += plan.batch_size) {
            const std::size_t end = std::min(begin + plan.batch_size, order.size());
            const auto loss =
                pipeline_detail::run_batch(model, grads, train, order, begin, end, true);
            BatchRecord rec;
            rec.reconstruction_loss = loss.recon;
            rec.classification_loss = loss.cls;
            rec.total_loss = loss.recon + loss.cls;
            if (!std::isfinite(rec.total_loss))
                throw TrainError("train_phase2: non-finite loss at epoch " + std::to_string(epoch),
                                 last_good);
            pipeline_detail::apply_update(model, grads, state, plan.optimizer, plan.clip_norm);
            result.batches.push_back(rec);
            epoch_loss += rec.total_loss * static_cast<double>(end - begin);
            ++global_batch;
            if (!test.examples.empty() && global_batch % plan.eval_every == 0) {
                const EvalMetrics m = evaluate(test, model);
                result.eval_events.push_back(
                    {global_batch, m.classification_accuracy, m.mean_reconstruction_loss});
                last_acc = m.classification_accuracy;
                pipeline_detail::progress_line(progress, epoch, global_batch,
                                               rec.reconstruction_loss, rec.classification_loss,
                                               last_acc);
            }
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(order.size()));
        last_good = pipeline_detail::snapshot(model);
    }
    return result;
}

// Decoder-only retraining against the frozen encoder: every training sentence
// is encoded once, then the decoder is trained to reproduce it from that
// fixed vector. Encoder params and the shared embedding table do not change.
inline Phase1Result retrain_decoder(const Corpus& corpus, Model& model, const TrainPlan& plan,
                                    std::ostream* progress = nullptr) {
    plan.validate();
    model.validate();
    if (corpus.examples.empty()) throw InputError("retrain_decoder: empty corpus");

    std::vector<Vector> features(corpus.examples.size());
    std::vector<PaddedSentence> padded(corpus.examples.size());
    for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
        padded[i] = pad_ids(corpus.examples[i].tokens, model.dec_cfg.max_len);
        features[i] =
            encode(padded[i].encoder_ids, model.embeddings, model.enc, model.enc_cfg).z;
    }

    Phase1Result result;
    ModelGrads grads = ModelGrads::zeros(model);
    OptimizerState state;
    Rng order_rng(derive_seed(plan.seed, 0x9A5E3ull));
    std::shared_ptr<const Model> last_good = pipeline_detail::snapshot(model);

    std::size_t global_batch = 0;
    for (std::size_t epoch = 1; epoch <= plan.retrain_epochs; ++epoch) {
        const auto order = order_rng.shuffled_indices(corpus.examples.size());
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += plan.batch_size) {
            const std::size_t end = std::min(begin + plan.batch_size, order.size());
            grads.clear();
            const double inv_n = 1.0 / static_cast<double>(end - begin);
            double batch_loss = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t ix = order[i];
                const TeacherForced tf =
                    decode_teacher_forced(features[ix], padded[ix].decoder_target, model.dec,
                                          model.dec_cfg, model.embeddings);
                batch_loss += tf.loss * inv_n;
                decoder_backward(padded[ix].decoder_target, model.dec, model.dec_cfg,
                                 model.embeddings, tf, inv_n, grads.dec, grads.embeddings,
                                 /*update_embeddings=*/false);
            }
            if (!std::isfinite(batch_loss))
                throw TrainError("retrain_decoder: non-finite loss at epoch " +
                                     std::to_string(epoch),
                                 last_good);
            auto pviews = decoder_param_views(model);
            auto gviews = decoder_grad_views(grads);
            Vector flat_p = flatten(pviews);
            Vector flat_g = flatten(gviews);
            pipeline_detail::clip_gradients(flat_g, plan.clip_norm);
            sgd_step(flat_p, flat_g, state, plan.optimizer);
            unflatten(flat_p, pviews);
            epoch_loss += batch_loss * static_cast<double>(end - begin);
            ++global_batch;
        }
        epoch_loss /= static_cast<double>(corpus.examples.size());
        result.epoch_losses.push_back(epoch_loss);
        pipeline_detail::progress_line(progress, epoch, global_batch, epoch_loss, 0.0, 0.0);
        last_good = pipeline_detail::snapshot(model);
    }
    return result;
}

struct TrainSummary {
    Phase1Result phase1;
    Phase2Result phase2;
    Phase1Result retrain;
    EvalMetrics final_test;
    EvalMetrics final_train;
};

// Full plan: phase 1 -> phase 2 -> decoder retrain, then final metrics.
inline TrainSummary train_full(const Corpus& train, const Corpus& test, Model& model,
                               const TrainPlan& plan, std::ostream* progress = nullptr) {
    TrainSummary s;
    s.phase1 = train_phase1(train, model, plan, progress);
    s.phase2 = train_phase2(train, test, model, plan, progress);
    s.retrain = retrain_decoder(train, model, plan, progress);
    s.final_train = evaluate(train, model);
    if (!test.examples.empty()) s.final_test = evaluate(test, model);
    return s;
}

} // namespace sentrav
