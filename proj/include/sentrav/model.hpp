#pragma once

// The trainable model bundle: shared embedding table, encoder, decoder, and
// the vocabulary they index. Parameter enumeration order here is the single
// source of truth for the flat optimizer view and for checkpoint layout.

#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "sentrav/corpus.hpp"
#include "sentrav/decoder.hpp"
#include "sentrav/encoder.hpp"
#include "sentrav/errors.hpp"
#include "sentrav/numerics.hpp"
#include "sentrav/vocab.hpp"

namespace sentrav {

struct Model {
    Vocabulary vocab;
    EncoderConfig enc_cfg;
    DecoderConfig dec_cfg;
    Matrix embeddings; // V x embed_dim, shared by encoder input and decoder input
    EncoderParams enc;
    DecoderParams dec;

    void validate() const {
        enc_cfg.validate();
        dec_cfg.validate();
        if (dec_cfg.state_dim != enc_cfg.feature_dim())
            throw ShapeError("Model: decoder state dim must equal encoder feature dim");
        if (dec_cfg.embed_dim != enc_cfg.embed_dim)
            throw ShapeError("Model: tied embedding dims disagree");
        if (embeddings.rows != vocab.size() || embeddings.cols != enc_cfg.embed_dim)
            throw ShapeError("Model: embedding table shape mismatch");
        if (dec.vocab_size() != vocab.size())
            throw ShapeError("Model: decoder output size != vocab size");
    }
};

inline Model init_model(const Vocabulary& vocab, const EncoderConfig& enc_cfg,
                        const DecoderConfig& dec_cfg, std::uint64_t seed) {
    Model m;
    m.vocab = vocab;
    m.enc_cfg = enc_cfg;
    m.dec_cfg = dec_cfg;
    m.embeddings = init_embeddings_random(vocab, enc_cfg.embed_dim, seed);
    Rng enc_rng(derive_seed(seed, 0xE4Cull));
    m.enc = EncoderParams::random_init(enc_cfg, enc_rng);
    Rng dec_rng(derive_seed(seed, 0xDECull));
    m.dec = DecoderParams::random_init(dec_cfg, vocab.size(), dec_rng);
    m.validate();
    return m;
}

// Gradients shaped exactly like the model parameters. Encoder and decoder
// both accumulate into the shared embeddings block.
struct ModelGrads {
    Matrix embeddings;
    EncoderParams enc;
    DecoderParams dec;

    static ModelGrads zeros(const Model& m) {
        ModelGrads g;
        g.embeddings = Matrix(m.embeddings.rows, m.embeddings.cols);
        g.enc = EncoderParams::zeros(m.enc_cfg);
        g.dec = DecoderParams::zeros(m.dec_cfg, m.vocab.size());
        return g;
    }

    void clear() {
        embeddings.fill(0.0);
        for (auto& f : enc.filters) {
            f.weight.fill(0.0);
            f.bias = 0.0;
        }
        enc.cls_weight.fill(0.0);
        std::fill(enc.cls_bias.begin(), enc.cls_bias.end(), 0.0);
        for (Matrix* m2 : {&dec.gru.w_update, &dec.gru.w_reset, &dec.gru.w_cand, &dec.gru.u_update,
                           &dec.gru.u_reset, &dec.gru.u_cand, &dec.out_weight})
            m2->fill(0.0);
        for (Vector* v : {&dec.gru.b_update, &dec.gru.b_reset, &dec.gru.b_cand, &dec.out_bias})
            std::fill(v->begin(), v->end(), 0.0);
    }
};

namespace detail {

template <typename EncP, typename DecP>
inline void collect_views(Matrix* embeddings, EncP* enc, DecP* dec,
                          std::vector<std::span<double>>& out) {
    auto push_m = [&](Matrix& m) { out.emplace_back(m.data.data(), m.data.size()); };
    auto push_v = [&](Vector& v) { out.emplace_back(v.data(), v.size()); };
    if (embeddings) push_m(*embeddings);
    if (enc) {
        for (auto& f : enc->filters) {
            push_m(f.weight);
            out.emplace_back(&f.bias, 1);
        }
        push_m(enc->cls_weight);
        push_v(enc->cls_bias);
    }
    if (dec) {
        push_m(dec->gru.w_update);
        push_m(dec->gru.w_reset);
        push_m(dec->gru.w_cand);
        push_m(dec->gru.u_update);
        push_m(dec->gru.u_reset);
        push_m(dec->gru.u_cand);
        push_v(dec->gru.b_update);
        push_v(dec->gru.b_reset);
        push_v(dec->gru.b_cand);
        push_m(dec->out_weight);
        push_v(dec->out_bias);
    }
}

} // namespace detail

// All trainable parameters in a fixed order.
inline std::vector<std::span<double>> param_views(Model& m) {
    std::vector<std::span<double>> out;
    detail::collect_views(&m.embeddings, &m.enc, &m.dec, out);
    return out;
}

inline std::vector<std::span<double>> grad_views(ModelGrads& g) {
    std::vector<std::span<double>> out;
    detail::collect_views(&g.embeddings, &g.enc, &g.dec, out);
    return out;
}

// Decoder-only subset (used when the encoder is frozen).
inline std::vector<std::span<double>> decoder_param_views(Model& m) {
    std::vector<std::span<double>> out;
    detail::collect_views<EncoderParams, DecoderParams>(nullptr, nullptr, &m.dec, out);
    return out;
}

inline std::vector<std::span<double>> decoder_grad_views(ModelGrads& g) {
    std::vector<std::span<double>> out;
    detail::collect_views<EncoderParams, DecoderParams>(nullptr, nullptr, &g.dec, out);
    return out;
}

inline std::size_t total_size(const std::vector<std::span<double>>& views) {
    std::size_t n = 0;
    for (const auto& v : views) n += v.size();
    return n;
}

inline Vector flatten(const std::vector<std::span<double>>& views) {
    Vector flat;
    flat.reserve(total_size(views));
    for (const auto& v : views) flat.insert(flat.end(), v.begin(), v.end());
    return flat;
}

inline void unflatten(const Vector& flat, std::vector<std::span<double>>& views) {
    std::size_t off = 0;
    for (auto& v : views) {
        if (off + v.size() > flat.size()) throw ShapeError("unflatten: flat vector too short");
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = flat[off + i];
        off += v.size();
    }
    if (off != flat.size()) throw ShapeError("unflatten: flat vector length mismatch");
}

// FNV-1a over the raw parameter bytes; used for freeze contracts and
// determinism checks.
inline std::uint64_t params_hash(Model& m) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& view : param_views(m))
        for (double x : view) {
            std::uint64_t bits;
            static_assert(sizeof bits == sizeof x);
            std::memcpy(&bits, &x, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xFFull;
                h *= 1099511628211ull;
            }
        }
    return h;
}

inline std::uint64_t encoder_hash(Model& m) {
    std::vector<std::span<double>> views;
    detail::collect_views<EncoderParams, DecoderParams>(&m.embeddings, &m.enc, nullptr, views);
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& view : views)
        for (double x : view) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xFFull;
                h *= 1099511628211ull;
            }
        }
    return h;
}

// Convenience: tokenize + pad + encode one raw sentence.
inline Encoding encode_text(const Model& m, const std::string& text) {
    const auto padded = pad_and_index(tokenize(text), m.vocab, m.dec_cfg.max_len);
    return encode(padded.encoder_ids, m.embeddings, m.enc, m.enc_cfg);
}

} // namespace sentrav
