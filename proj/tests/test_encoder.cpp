#include <gtest/gtest.h>

#include <cmath>

#include "sentrav/encoder.hpp"
#include "sentrav/model.hpp"
#include "sentrav/rng.hpp"
#include "sentrav/vocab.hpp"

using namespace sentrav;

namespace {

struct Fixture {
    EncoderConfig cfg;
    Matrix embeddings;
    EncoderParams params;
    std::vector<int> ids;
};

// Tiny instance; tanh keeps the objective smooth for finite differences.
Fixture make_fixture(std::uint64_t seed, Activation act = Activation::tanh_act) {
    Fixture f;
    f.cfg.embed_dim = 4;
    f.cfg.filter_heights = {1, 2};
    f.cfg.filters_per_height = 2;
    f.cfg.activation = act;
    Rng rng(seed);
    f.embeddings = Matrix(8, 4);
    for (double& x : f.embeddings.data) x = rng.normal(0.0, 0.8);
    for (std::size_t j = 0; j < 4; ++j) f.embeddings(Vocabulary::pad_id, j) = 0.0;
    f.params = EncoderParams::random_init(f.cfg, rng, 0.6);
    f.ids = {4, 5, 6, 7, 4, Vocabulary::pad_id};
    return f;
}

double scalar_loss(const Fixture& f, const Matrix& embeddings, const EncoderParams& params,
                   const Vector& d_z, const Vector& d_logits) {
    const Encoding e = encode(f.ids, embeddings, params, f.cfg);
    double s = 0.0;
    for (std::size_t i = 0; i < e.z.size(); ++i) s += e.z[i] * d_z[i];
    for (std::size_t i = 0; i < e.logits.size(); ++i) s += e.logits[i] * d_logits[i];
    return s;
}

// Require a clear pooling margin so finite differences cannot flip an argmax.
bool margins_ok(const Fixture& f) {
    const Matrix sentence = embed_sequence(f.ids, f.embeddings);
    for (const auto& filt : f.params.filters) {
        const Vector out = conv_full_width(sentence, filt.weight, filt.bias, f.cfg.activation);
        if (out.size() < 2) continue;
        const MaxOverTime top = max_over_time(out);
        double second = -1e300;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (i != top.index) second = std::max(second, out[i]);
        if (top.value - second < 1e-3) return false;
    }
    return true;
}

} // namespace

TEST(Encode, FeatureDimMatchesConfig) {
    EncoderConfig paper;
    paper.embed_dim = 300;
    paper.filter_heights = {1, 2, 3, 4};
    paper.filters_per_height = 75;
    EXPECT_EQ(paper.feature_dim(), 300u);

    EncoderConfig desk;
    desk.embed_dim = 8;
    desk.filter_heights = {1, 2, 3, 4};
    desk.filters_per_height = 3;
    EXPECT_EQ(desk.feature_dim(), 12u);

    Rng rng(1);
    Matrix emb(6, 8);
    for (double& x : emb.data) x = rng.normal();
    const EncoderParams p = EncoderParams::random_init(desk, rng);
    const Encoding e = encode({4, 5, 4, 5, 4}, emb, p, desk);
    EXPECT_EQ(e.z.size(), 12u);
    EXPECT_EQ(e.pool_argmax.size(), 12u);
    EXPECT_EQ(e.logits.size(), 2u);
}

TEST(Encode, ZeroEmbeddingsAndBiasesGiveZeroFeaturesUnderRelu) {
    EncoderConfig cfg;
    cfg.embed_dim = 4;
    cfg.filter_heights = {1, 2};
    cfg.filters_per_height = 3;
    cfg.activation = Activation::relu;
    Rng rng(2);
    EncoderParams p = EncoderParams::random_init(cfg, rng);
    const Matrix emb(5, 4); // all zero
    const Encoding e = encode({1, 2, 3, 4}, emb, p, cfg);
    for (double v : e.z) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Encode, DeterministicGivenInputs) {
    const Fixture f = make_fixture(3);
    const Encoding a = encode(f.ids, f.embeddings, f.params, f.cfg);
    const Encoding b = encode(f.ids, f.embeddings, f.params, f.cfg);
    EXPECT_EQ(a.z, b.z);
    EXPECT_EQ(a.logits, b.logits);
    EXPECT_EQ(a.pool_argmax, b.pool_argmax);
    EXPECT_EQ(a.predicted_label, b.predicted_label);
}

TEST(Encode, PredictedLabelIsLogitArgmax) {
    const Fixture f = make_fixture(4);
    const Encoding e = encode(f.ids, f.embeddings, f.params, f.cfg);
    EXPECT_EQ(e.predicted_label, e.logits[1] > e.logits[0] ? 1 : 0);
}

TEST(Encode, UnknownTokenIdThrows) {
    const Fixture f = make_fixture(5);
    std::vector<int> ids = f.ids;
    ids[0] = 99;
    EXPECT_THROW(encode(ids, f.embeddings, f.params, f.cfg), IndexError);
}

TEST(Encode, TooShortSequenceThrows) {
    const Fixture f = make_fixture(6);
    EXPECT_THROW(encode({4}, f.embeddings, f.params, f.cfg), ShapeError);
}

// Trailing PAD tokens cannot change z when PAD embeds to zero, relu(0)=0,
// and every filter's realized max is positive.
TEST(Encode, TrailingPadInvariance) {
    Rng rng(7);
    for (int attempt = 0; attempt < 50; ++attempt) {
        Fixture f = make_fixture(100 + static_cast<std::uint64_t>(attempt), Activation::relu);
        std::vector<int> base = {4, 5, 6, 7};
        const Encoding short_enc = encode(base, f.embeddings, f.params, f.cfg);
        bool all_positive = true;
        for (double v : short_enc.z)
            if (v <= 0.0) all_positive = false;
        if (!all_positive) continue;

        std::vector<int> padded = base;
        for (int k = 0; k < 5; ++k) padded.push_back(Vocabulary::pad_id);
        const Encoding pad_enc = encode(padded, f.embeddings, f.params, f.cfg);
        for (std::size_t i = 0; i < short_enc.z.size(); ++i)
            EXPECT_DOUBLE_EQ(pad_enc.z[i], short_enc.z[i]);
        return; // one qualifying instance is enough
    }
    FAIL() << "no instance with all-positive pooled features found";
}

TEST(EncoderBackward, ZeroUpstreamGivesZeroGrads) {
    const Fixture f = make_fixture(8);
    const Encoding e = encode(f.ids, f.embeddings, f.params, f.cfg);
    EncoderParams grads = EncoderParams::zeros(f.cfg);
    Matrix emb_grads(f.embeddings.rows, f.embeddings.cols);
    encoder_backward(f.ids, f.embeddings, f.params, f.cfg, e, Vector(f.cfg.feature_dim(), 0.0),
                     Vector(2, 0.0), grads, emb_grads);
    for (const auto& filt : grads.filters) {
        EXPECT_DOUBLE_EQ(filt.bias, 0.0);
        for (double v : filt.weight.data) EXPECT_DOUBLE_EQ(v, 0.0);
    }
    for (double v : grads.cls_weight.data) EXPECT_DOUBLE_EQ(v, 0.0);
    for (double v : emb_grads.data) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(EncoderBackward, StaleContextThrows) {
    const Fixture f = make_fixture(9);
    Encoding e = encode(f.ids, f.embeddings, f.params, f.cfg);
    e.pool_argmax.pop_back();
    EncoderParams grads = EncoderParams::zeros(f.cfg);
    Matrix emb_grads(f.embeddings.rows, f.embeddings.cols);
    EXPECT_THROW(encoder_backward(f.ids, f.embeddings, f.params, f.cfg, e,
                                  Vector(f.cfg.feature_dim(), 0.0), Vector(2, 0.0), grads,
                                  emb_grads),
                 UsageError);
}

// A filter whose pooled output does not feed the loss gets no gradient.
TEST(EncoderBackward, UnusedFilterGetsZeroGradient) {
    const Fixture f = make_fixture(10);
    const Encoding e = encode(f.ids, f.embeddings, f.params, f.cfg);
    Vector d_z(f.cfg.feature_dim(), 1.0);
    d_z[2] = 0.0; // exclude filter 2 from the loss
    EncoderParams grads = EncoderParams::zeros(f.cfg);
    Matrix emb_grads(f.embeddings.rows, f.embeddings.cols);
    encoder_backward(f.ids, f.embeddings, f.params, f.cfg, e, d_z, Vector(2, 0.0), grads,
                     emb_grads);
    EXPECT_DOUBLE_EQ(grads.filters[2].bias, 0.0);
    for (double v : grads.filters[2].weight.data) EXPECT_DOUBLE_EQ(v, 0.0);
    bool filter0_nonzero = false;
    for (double v : grads.filters[0].weight.data)
        if (v != 0.0) filter0_nonzero = true;
    EXPECT_TRUE(filter0_nonzero);
}

TEST(EncoderBackward, MatchesFiniteDifferences) {
    int checked = 0;
    for (std::uint64_t seed = 20; checked < 5 && seed < 200; ++seed) {
        const Fixture f = make_fixture(seed);
        if (!margins_ok(f)) continue;
        ++checked;

        Rng rng(seed + 1000);
        Vector d_z(f.cfg.feature_dim()), d_logits(2);
        for (double& v : d_z) v = rng.normal();
        for (double& v : d_logits) v = rng.normal();

        const Encoding e = encode(f.ids, f.embeddings, f.params, f.cfg);
        EncoderParams grads = EncoderParams::zeros(f.cfg);
        Matrix emb_grads(f.embeddings.rows, f.embeddings.cols);
        encoder_backward(f.ids, f.embeddings, f.params, f.cfg, e, d_z, d_logits, grads, emb_grads);

        const double h = 1e-5;
        Vector analytic, numeric;
        auto push = [&](double a, double n) {
            analytic.push_back(a);
            numeric.push_back(n);
        };
        for (std::size_t k = 0; k < f.params.filters.size(); ++k) {
            for (std::size_t i = 0; i < f.params.filters[k].weight.data.size(); ++i) {
                EncoderParams pp = f.params, pm = f.params;
                pp.filters[k].weight.data[i] += h;
                pm.filters[k].weight.data[i] -= h;
                push(grads.filters[k].weight.data[i],
                     (scalar_loss(f, f.embeddings, pp, d_z, d_logits) -
                      scalar_loss(f, f.embeddings, pm, d_z, d_logits)) /
                         (2 * h));
            }
            EncoderParams pp = f.params, pm = f.params;
            pp.filters[k].bias += h;
            pm.filters[k].bias -= h;
            push(grads.filters[k].bias, (scalar_loss(f, f.embeddings, pp, d_z, d_logits) -
                                         scalar_loss(f, f.embeddings, pm, d_z, d_logits)) /
                                            (2 * h));
        }
        for (std::size_t i = 0; i < f.params.cls_weight.data.size(); ++i) {
            EncoderParams pp = f.params, pm = f.params;
            pp.cls_weight.data[i] += h;
            pm.cls_weight.data[i] -= h;
            push(grads.cls_weight.data[i], (scalar_loss(f, f.embeddings, pp, d_z, d_logits) -
                                            scalar_loss(f, f.embeddings, pm, d_z, d_logits)) /
                                               (2 * h));
        }
        for (std::size_t i = 0; i < f.params.cls_bias.size(); ++i) {
            EncoderParams pp = f.params, pm = f.params;
            pp.cls_bias[i] += h;
            pm.cls_bias[i] -= h;
            push(grads.cls_bias[i], (scalar_loss(f, f.embeddings, pp, d_z, d_logits) -
                                     scalar_loss(f, f.embeddings, pm, d_z, d_logits)) /
                                        (2 * h));
        }
        for (std::size_t i = 0; i < f.embeddings.data.size(); ++i) {
            // PAD row grads are pinned to zero by contract
            if (i / f.embeddings.cols == static_cast<std::size_t>(Vocabulary::pad_id)) continue;
            Matrix ep = f.embeddings, em = f.embeddings;
            ep.data[i] += h;
            em.data[i] -= h;
            push(emb_grads.data[i], (scalar_loss(f, ep, f.params, d_z, d_logits) -
                                     scalar_loss(f, em, f.params, d_z, d_logits)) /
                                        (2 * h));
        }

        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
            na += analytic[i] * analytic[i];
            nn += numeric[i] * numeric[i];
        }
        EXPECT_LT(std::sqrt(diff), 1e-5 * std::max({1.0, std::sqrt(na), std::sqrt(nn)}))
            << "seed " << seed;
    }
    EXPECT_EQ(checked, 5);
}
