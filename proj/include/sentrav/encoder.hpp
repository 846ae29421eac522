#pragma once

// Convolutional sentence encoder: embedding lookup, full-width convolutions
// at several filter heights, max-over-time pooling into the feature vector z,
// and a linear binary sentiment classifier on top of z.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "sentrav/errors.hpp"
#include "sentrav/numerics.hpp"
#include "sentrav/rng.hpp"

namespace sentrav {

struct EncoderConfig {
    std::size_t embed_dim = 16;
    std::vector<std::size_t> filter_heights = {1, 2, 3, 4};
    std::size_t filters_per_height = 8;
    Activation activation = Activation::relu;
    std::size_t num_classes = 2;

    std::size_t feature_dim() const { return filters_per_height * filter_heights.size(); }

    void validate() const {
        if (embed_dim < 1) throw InputError("EncoderConfig: embed_dim must be >= 1");
        if (filter_heights.empty()) throw InputError("EncoderConfig: no filter heights");
        if (!std::is_sorted(filter_heights.begin(), filter_heights.end()))
            throw InputError("EncoderConfig: filter heights must be ascending");
        for (std::size_t h : filter_heights)
            if (h < 1) throw InputError("EncoderConfig: filter height must be >= 1");
        if (filters_per_height < 1) throw InputError("EncoderConfig: filters_per_height must be >= 1");
        if (num_classes != 2) throw InputError("EncoderConfig: num_classes is fixed at 2");
    }
};

struct ConvFilter {
    Matrix weight; // h x d
    double bias = 0.0;
};

struct EncoderParams {
    // Ordered by height ascending, filter index ascending within a height;
    // z follows the same order.
    std::vector<ConvFilter> filters;
    Matrix cls_weight; // num_classes x feature_dim
    Vector cls_bias;   // num_classes

    static EncoderParams zeros(const EncoderConfig& cfg) {
        cfg.validate();
        EncoderParams p;
        for (std::size_t h : cfg.filter_heights)
            for (std::size_t f = 0; f < cfg.filters_per_height; ++f)
                p.filters.push_back({Matrix(h, cfg.embed_dim), 0.0});
        p.cls_weight = Matrix(cfg.num_classes, cfg.feature_dim());
        p.cls_bias = Vector(cfg.num_classes, 0.0);
        return p;
    }

    static EncoderParams random_init(const EncoderConfig& cfg, Rng& rng, double scale = 0.1) {
        EncoderParams p = zeros(cfg);
        for (auto& f : p.filters)
            for (double& w : f.weight.data) w = rng.normal(0.0, scale);
        for (double& w : p.cls_weight.data) w = rng.normal(0.0, scale);
        return p;
    }
};

struct Encoding {
    Vector z;                        // pooled feature vector, dim = feature_dim
    Vector logits;                   // num_classes
    int predicted_label = 0;         // argmax of logits (0 = negative, 1 = positive)
    std::vector<std::size_t> pool_argmax; // winning position per filter, for backprop
};

inline Matrix embed_sequence(const std::vector<int>& ids, const Matrix& embeddings) {
    Matrix s(ids.size(), embeddings.cols);
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= embeddings.rows)
            throw IndexError("embed_sequence: token id " + std::to_string(ids[t]) + " out of range");
        for (std::size_t j = 0; j < embeddings.cols; ++j)
            s(t, j) = embeddings(static_cast<std::size_t>(ids[t]), j);
    }
    return s;
}

inline Encoding encode(const std::vector<int>& ids, const Matrix& embeddings,
                       const EncoderParams& params, const EncoderConfig& cfg) {
    cfg.validate();
    if (embeddings.cols != cfg.embed_dim) throw ShapeError("encode: embedding dim mismatch");
    if (ids.size() < cfg.filter_heights.back())
        throw ShapeError("encode: sequence shorter than largest filter; pad first");
    if (params.filters.size() != cfg.feature_dim()) throw ShapeError("encode: params/config mismatch");

    const Matrix sentence = embed_sequence(ids, embeddings);

    Encoding enc;
    enc.z.resize(cfg.feature_dim());
    enc.pool_argmax.resize(cfg.feature_dim());
    for (std::size_t k = 0; k < params.filters.size(); ++k) {
        const Vector activated = conv_full_width(sentence, params.filters[k].weight,
                                                 params.filters[k].bias, cfg.activation);
        const MaxOverTime pooled = max_over_time(activated);
        enc.z[k] = pooled.value;
        enc.pool_argmax[k] = pooled.index;
    }

    enc.logits = matvec(params.cls_weight, enc.z);
    axpy(1.0, params.cls_bias, enc.logits);
    enc.predicted_label = 0;
    for (std::size_t i = 1; i < enc.logits.size(); ++i)
        if (enc.logits[i] > enc.logits[static_cast<std::size_t>(enc.predicted_label)])
            enc.predicted_label = static_cast<int>(i);
    return enc;
}

// Accumulates parameter gradients (into a params-shaped holder) and
// embedding-row gradients for one encoded sentence, given upstream d_loss/dz
// and d_loss/dlogits. Pool gradients route only through the recorded argmax
// positions; the PAD embedding row is pinned and receives no gradient.
inline void encoder_backward(const std::vector<int>& ids, const Matrix& embeddings,
                             const EncoderParams& params, const EncoderConfig& cfg,
                             const Encoding& enc, const Vector& d_z, const Vector& d_logits,
                             EncoderParams& param_grads, Matrix& embedding_grads,
                             int pad_id = 0) {
    cfg.validate();
    if (enc.pool_argmax.size() != cfg.feature_dim() || enc.z.size() != cfg.feature_dim())
        throw UsageError("encoder_backward: stale or mismatched encoding context");
    if (d_z.size() != cfg.feature_dim()) throw ShapeError("encoder_backward: d_z size mismatch");
    if (d_logits.size() != cfg.num_classes) throw ShapeError("encoder_backward: d_logits size mismatch");
    if (embedding_grads.rows != embeddings.rows || embedding_grads.cols != embeddings.cols ||
        param_grads.filters.size() != params.filters.size())
        throw ShapeError("encoder_backward: gradient buffer mismatch");

    const Matrix sentence = embed_sequence(ids, embeddings);

    // classifier: logits = W z + b
    outer_add(param_grads.cls_weight, 1.0, d_logits, enc.z);
    axpy(1.0, d_logits, param_grads.cls_bias);
    Vector dz_total = d_z;
    axpy(1.0, matvec_t(params.cls_weight, d_logits), dz_total);

    Matrix d_sentence(sentence.rows, sentence.cols);
    for (std::size_t k = 0; k < params.filters.size(); ++k) {
        if (dz_total[k] == 0.0) continue;
        const Matrix& w = params.filters[k].weight;
        const std::size_t h = w.rows;
        const std::size_t pos = enc.pool_argmax[k];
        if (pos + h > sentence.rows) throw UsageError("encoder_backward: stale pooling position");

        double pre = params.filters[k].bias;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w.cols; ++j) pre += sentence(pos + i, j) * w(i, j);
        const double gd = dz_total[k] * activate_deriv(cfg.activation, pre);
        param_grads.filters[k].bias += gd;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w.cols; ++j) {
                param_grads.filters[k].weight(i, j) += gd * sentence(pos + i, j);
                d_sentence(pos + i, j) += gd * w(i, j);
            }
    }

    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] == pad_id) continue;
        for (std::size_t j = 0; j < embeddings.cols; ++j)
            embedding_grads(static_cast<std::size_t>(ids[t]), j) += d_sentence(t, j);
    }
}

} // namespace sentrav
