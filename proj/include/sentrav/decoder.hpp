#pragma once

// GRU sentence decoder. The feature vector initializes the hidden state;
// the input at each step is the embedding of the previously emitted (or
// gold) token, drawn from the same table the encoder uses when tying is on.

#include <cstddef>
#include <vector>

#include "sentrav/errors.hpp"
#include "sentrav/numerics.hpp"
#include "sentrav/rng.hpp"
#include "sentrav/vocab.hpp"

namespace sentrav {

struct DecoderConfig {
    std::size_t state_dim = 32; // must equal the encoder feature dim
    std::size_t embed_dim = 16;
    std::size_t max_len = 30;
    bool tie_input_embeddings = true;

    void validate() const {
        if (state_dim < 1 || embed_dim < 1) throw InputError("DecoderConfig: dims must be >= 1");
        if (max_len < 1) throw InputError("DecoderConfig: max_len must be >= 1");
    }
};

struct DecoderParams {
    GruParams gru;     // state_dim x embed_dim input weights, state_dim x state_dim recurrent
    Matrix out_weight; // vocab x state_dim
    Vector out_bias;   // vocab

    static DecoderParams zeros(const DecoderConfig& cfg, std::size_t vocab_size) {
        cfg.validate();
        DecoderParams p;
        p.gru = GruParams::zeros(cfg.state_dim, cfg.embed_dim);
        p.out_weight = Matrix(vocab_size, cfg.state_dim);
        p.out_bias = Vector(vocab_size, 0.0);
        return p;
    }

    static DecoderParams random_init(const DecoderConfig& cfg, std::size_t vocab_size, Rng& rng,
                                     double scale = 0.1) {
        DecoderParams p = zeros(cfg, vocab_size);
        for (Matrix* m : {&p.gru.w_update, &p.gru.w_reset, &p.gru.w_cand, &p.gru.u_update,
                          &p.gru.u_reset, &p.gru.u_cand, &p.out_weight})
            for (double& w : m->data) w = rng.normal(0.0, scale);
        return p;
    }

    std::size_t vocab_size() const { return out_weight.rows; }
};

inline Vector embedding_row(const Matrix& embeddings, int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= embeddings.rows)
        throw IndexError("embedding_row: token id out of range");
    Vector x(embeddings.cols);
    for (std::size_t j = 0; j < embeddings.cols; ++j)
        x[j] = embeddings(static_cast<std::size_t>(id), j);
    return x;
}

// Greedy decoding: h0 = z, first input is the SOS embedding, each step emits
// the argmax token and feeds its embedding forward. Stops on EOS or after
// max_len emitted tokens. SOS/EOS are not part of the returned sequence.
inline std::vector<int> decode_greedy(const Vector& z, const DecoderParams& params,
                                      const DecoderConfig& cfg, const Matrix& embeddings,
                                      const Vocabulary& vocab) {
    cfg.validate();
    if (z.size() != cfg.state_dim) throw ShapeError("decode_greedy: z dim != state dim");
    if (params.vocab_size() != vocab.size()) throw ShapeError("decode_greedy: params/vocab mismatch");
    if (embeddings.cols != cfg.embed_dim) throw ShapeError("decode_greedy: embedding dim mismatch");

    std::vector<int> out;
    Vector h = z;
    Vector x = embedding_row(embeddings, Vocabulary::sos_id);
    for (std::size_t step = 0; step < cfg.max_len; ++step) {
        h = gru_cell(x, h, params.gru);
        Vector logits = matvec(params.out_weight, h);
        axpy(1.0, params.out_bias, logits);
        std::size_t best = 0;
        for (std::size_t i = 1; i < logits.size(); ++i)
            if (logits[i] > logits[best]) best = i;
        if (static_cast<int>(best) == Vocabulary::eos_id) break;
        out.push_back(static_cast<int>(best));
        x = embedding_row(embeddings, static_cast<int>(best));
    }
    return out;
}

struct TeacherForced {
    double loss = 0.0;              // mean per-position cross-entropy
    std::vector<Vector> logits;     // one per position
    std::vector<Vector> states;     // h_0 .. h_T (states[0] = z)
};

// Runs the GRU feeding gold tokens as inputs and scores the prediction of
// gold[t] at every position. gold must be nonempty and end with EOS.
inline TeacherForced decode_teacher_forced(const Vector& z, const std::vector<int>& gold,
                                           const DecoderParams& params, const DecoderConfig& cfg,
                                           const Matrix& embeddings) {
    cfg.validate();
    if (z.size() != cfg.state_dim) throw ShapeError("decode_teacher_forced: z dim != state dim");
    if (gold.empty()) throw InputError("decode_teacher_forced: empty gold sequence");
    if (gold.back() != Vocabulary::eos_id)
        throw InputError("decode_teacher_forced: gold must end with EOS");
    for (int id : gold)
        if (id < 0 || static_cast<std::size_t>(id) >= params.vocab_size())
            throw IndexError("decode_teacher_forced: token id out of vocab");

    TeacherForced result;
    result.states.reserve(gold.size() + 1);
    result.states.push_back(z);
    result.logits.reserve(gold.size());

    Vector h = z;
    double total = 0.0;
    for (std::size_t t = 0; t < gold.size(); ++t) {
        const int input_id = (t == 0) ? Vocabulary::sos_id : gold[t - 1];
        const Vector x = embedding_row(embeddings, input_id);
        h = gru_cell(x, h, params.gru);
        Vector logits = matvec(params.out_weight, h);
        axpy(1.0, params.out_bias, logits);
        total += softmax_cross_entropy(logits, static_cast<std::size_t>(gold[t])).loss;
        result.states.push_back(h);
        result.logits.push_back(std::move(logits));
    }
    result.loss = total / static_cast<double>(gold.size());
    return result;
}

// Backward pass for decode_teacher_forced; `forward` must be the result of
// the matching forward call. d_loss scales the whole gradient (use 1/batch
// for batch means). Accumulates into params-shaped holders and returns the
// gradient w.r.t. the initial state z. Set update_embeddings=false to freeze
// the input table.
inline Vector decoder_backward(const std::vector<int>& gold, const DecoderParams& params,
                               const DecoderConfig& cfg, const Matrix& embeddings,
                               const TeacherForced& forward, double d_loss,
                               DecoderParams& param_grads, Matrix& embedding_grads,
                               bool update_embeddings = true) {
    if (forward.logits.size() != gold.size() || forward.states.size() != gold.size() + 1)
        throw UsageError("decoder_backward: forward context does not match gold sequence");
    const double scale = d_loss / static_cast<double>(gold.size());

    Vector d_h(cfg.state_dim, 0.0);
    for (std::size_t ti = gold.size(); ti-- > 0;) {
        // output projection at step ti
        Vector d_logits = softmax(forward.logits[ti]);
        d_logits[static_cast<std::size_t>(gold[ti])] -= 1.0;
        for (double& v : d_logits) v *= scale;

        const Vector& h = forward.states[ti + 1];
        outer_add(param_grads.out_weight, 1.0, d_logits, h);
        axpy(1.0, d_logits, param_grads.out_bias);
        axpy(1.0, matvec_t(params.out_weight, d_logits), d_h);

        const int input_id = (ti == 0) ? Vocabulary::sos_id : gold[ti - 1];
        const Vector x = embedding_row(embeddings, input_id);
        GruBackward gb = gru_cell_backward(x, forward.states[ti], params.gru, d_h);

        auto acc = [](Matrix& dst, const Matrix& src) {
            for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
        };
        acc(param_grads.gru.w_update, gb.d_params.w_update);
        acc(param_grads.gru.w_reset, gb.d_params.w_reset);
        acc(param_grads.gru.w_cand, gb.d_params.w_cand);
        acc(param_grads.gru.u_update, gb.d_params.u_update);
        acc(param_grads.gru.u_reset, gb.d_params.u_reset);
        acc(param_grads.gru.u_cand, gb.d_params.u_cand);
        axpy(1.0, gb.d_params.b_update, param_grads.gru.b_update);
        axpy(1.0, gb.d_params.b_reset, param_grads.gru.b_reset);
        axpy(1.0, gb.d_params.b_cand, param_grads.gru.b_cand);

        if (update_embeddings && input_id != Vocabulary::pad_id)
            for (std::size_t j = 0; j < cfg.embed_dim; ++j)
                embedding_grads(static_cast<std::size_t>(input_id), j) += gb.d_x[j];

        d_h = std::move(gb.d_h_prev);
    }
    return d_h;
}

} // namespace sentrav
