#include <gtest/gtest.h>

#include <cmath>

#include "sentrav/corpus.hpp"
#include "sentrav/decoder.hpp"
#include "sentrav/model.hpp"
#include "sentrav/optim.hpp"
#include "sentrav/rng.hpp"

using namespace sentrav;

namespace {

struct Fixture {
    Vocabulary vocab;
    DecoderConfig cfg;
    Matrix embeddings;
    DecoderParams params;
};

Fixture make_fixture(std::uint64_t seed, std::size_t extra_tokens = 5) {
    Fixture f;
    for (std::size_t i = 0; i < extra_tokens; ++i) f.vocab.add("w" + std::to_string(i));
    f.cfg.state_dim = 6;
    f.cfg.embed_dim = 4;
    f.cfg.max_len = 10;
    Rng rng(seed);
    f.embeddings = Matrix(f.vocab.size(), f.cfg.embed_dim);
    for (double& x : f.embeddings.data) x = rng.normal(0.0, 0.7);
    for (std::size_t j = 0; j < f.cfg.embed_dim; ++j) f.embeddings(Vocabulary::pad_id, j) = 0.0;
    f.params = DecoderParams::random_init(f.cfg, f.vocab.size(), rng, 0.5);
    return f;
}

} // namespace

TEST(DecodeGreedy, RiggedEosGivesEmptySequence) {
    Fixture f = make_fixture(1);
    f.params = DecoderParams::zeros(f.cfg, f.vocab.size());
    f.params.out_bias[Vocabulary::eos_id] = 10.0; // EOS always wins
    const Vector z(f.cfg.state_dim, 0.3);
    EXPECT_TRUE(decode_greedy(z, f.params, f.cfg, f.embeddings, f.vocab).empty());
}

TEST(DecodeGreedy, Deterministic) {
    const Fixture f = make_fixture(2);
    Vector z(f.cfg.state_dim);
    Rng rng(3);
    for (double& v : z) v = rng.normal();
    EXPECT_EQ(decode_greedy(z, f.params, f.cfg, f.embeddings, f.vocab),
              decode_greedy(z, f.params, f.cfg, f.embeddings, f.vocab));
}

TEST(DecodeGreedy, LengthNeverExceedsMaxLen) {
    Rng rng(5);
    for (int it = 0; it < 20; ++it) {
        Fixture f = make_fixture(10 + static_cast<std::uint64_t>(it));
        f.params.out_bias[Vocabulary::eos_id] = -100.0; // EOS suppressed
        Vector z(f.cfg.state_dim);
        for (double& v : z) v = rng.normal();
        const auto out = decode_greedy(z, f.params, f.cfg, f.embeddings, f.vocab);
        EXPECT_LE(out.size(), f.cfg.max_len);
        EXPECT_EQ(out.size(), f.cfg.max_len); // with EOS suppressed it runs full length
    }
}

TEST(DecodeGreedy, WrongStateDimThrows) {
    const Fixture f = make_fixture(6);
    EXPECT_THROW(decode_greedy(Vector(3, 0.0), f.params, f.cfg, f.embeddings, f.vocab),
                 ShapeError);
}

TEST(TeacherForced, UniformOutputWeightsGiveLogVEverywhere) {
    Fixture f = make_fixture(7);
    f.params.out_weight.fill(0.0);
    std::fill(f.params.out_bias.begin(), f.params.out_bias.end(), 0.0);
    const std::vector<int> gold = {4, 5, 6, Vocabulary::eos_id};
    const Vector z(f.cfg.state_dim, 0.2);
    const TeacherForced tf = decode_teacher_forced(z, gold, f.params, f.cfg, f.embeddings);
    EXPECT_NEAR(tf.loss, std::log(static_cast<double>(f.vocab.size())), 1e-12);
    ASSERT_EQ(tf.logits.size(), gold.size());
}

TEST(TeacherForced, RequiresEosTerminatedGold) {
    const Fixture f = make_fixture(8);
    const Vector z(f.cfg.state_dim, 0.0);
    EXPECT_THROW(decode_teacher_forced(z, {}, f.params, f.cfg, f.embeddings), InputError);
    EXPECT_THROW(decode_teacher_forced(z, {4, 5}, f.params, f.cfg, f.embeddings), InputError);
}

TEST(TeacherForced, OutOfVocabTokenThrows) {
    const Fixture f = make_fixture(9);
    const Vector z(f.cfg.state_dim, 0.0);
    EXPECT_THROW(decode_teacher_forced(z, {99, Vocabulary::eos_id}, f.params, f.cfg, f.embeddings),
                 IndexError);
}

// Permuting non-reserved vocabulary entries together with the output rows
// leaves the loss unchanged.
TEST(TeacherForced, VocabPermutationInvariance) {
    const Fixture f = make_fixture(11);
    const std::vector<int> gold = {4, 6, 5, Vocabulary::eos_id};
    Vector z(f.cfg.state_dim);
    Rng rng(12);
    for (double& v : z) v = rng.normal();
    const double base = decode_teacher_forced(z, gold, f.params, f.cfg, f.embeddings).loss;

    // swap tokens 4 <-> 5 everywhere
    auto swap_tok = [](int t) { return t == 4 ? 5 : (t == 5 ? 4 : t); };
    Fixture g = f;
    for (std::size_t j = 0; j < f.cfg.embed_dim; ++j) {
        std::swap(g.embeddings(4, j), g.embeddings(5, j));
    }
    for (std::size_t j = 0; j < f.cfg.state_dim; ++j)
        std::swap(g.params.out_weight(4, j), g.params.out_weight(5, j));
    std::swap(g.params.out_bias[4], g.params.out_bias[5]);
    std::vector<int> gold_p;
    for (int t : gold) gold_p.push_back(swap_tok(t));
    const double permuted = decode_teacher_forced(z, gold_p, g.params, g.cfg, g.embeddings).loss;
    EXPECT_NEAR(base, permuted, 1e-12);
}

// The tied table is a single object: mutating one row changes both the
// encoder's sentence matrix and the decoder's input lookups.
TEST(TiedEmbeddings, SingleSourceOfTruth) {
    Fixture f = make_fixture(13);
    const int tok = 4;
    const Vector before = embedding_row(f.embeddings, tok);
    Matrix sentence = embed_sequence({tok, tok + 1}, f.embeddings);
    for (std::size_t j = 0; j < f.cfg.embed_dim; ++j) EXPECT_EQ(sentence(0, j), before[j]);

    f.embeddings(tok, 0) += 1.0;
    const Vector after = embedding_row(f.embeddings, tok);
    sentence = embed_sequence({tok}, f.embeddings);
    EXPECT_EQ(sentence(0, 0), after[0]);
    EXPECT_NE(before[0], after[0]);
}

TEST(DecoderBackward, MatchesFiniteDifferences) {
    const Fixture f = make_fixture(17);
    const std::vector<int> gold = {4, 5, 6, 7, Vocabulary::eos_id};
    Rng rng(18);
    Vector z(f.cfg.state_dim);
    for (double& v : z) v = rng.normal(0.0, 0.5);

    auto loss = [&](const DecoderParams& p, const Matrix& emb, const Vector& zz) {
        return decode_teacher_forced(zz, gold, p, f.cfg, emb).loss;
    };

    const TeacherForced tf = decode_teacher_forced(z, gold, f.params, f.cfg, f.embeddings);
    DecoderParams grads = DecoderParams::zeros(f.cfg, f.vocab.size());
    Matrix emb_grads(f.embeddings.rows, f.embeddings.cols);
    const Vector d_z =
        decoder_backward(gold, f.params, f.cfg, f.embeddings, tf, 1.0, grads, emb_grads);

    const double h = 1e-5;
    Vector analytic, numeric;
    auto push = [&](double a, double n) {
        analytic.push_back(a);
        numeric.push_back(n);
    };

    auto check_matrix = [&](Matrix DecoderParams::* field, const Matrix& grad) {
        for (std::size_t i = 0; i < (f.params.*field).data.size(); ++i) {
            DecoderParams pp = f.params, pm = f.params;
            (pp.*field).data[i] += h;
            (pm.*field).data[i] -= h;
            push(grad.data[i],
                 (loss(pp, f.embeddings, z) - loss(pm, f.embeddings, z)) / (2 * h));
        }
    };
    auto check_gru_matrix = [&](Matrix GruParams::* field, const Matrix& grad) {
        for (std::size_t i = 0; i < (f.params.gru.*field).data.size(); ++i) {
            DecoderParams pp = f.params, pm = f.params;
            (pp.gru.*field).data[i] += h;
            (pm.gru.*field).data[i] -= h;
            push(grad.data[i],
                 (loss(pp, f.embeddings, z) - loss(pm, f.embeddings, z)) / (2 * h));
        }
    };
    auto check_gru_vector = [&](Vector GruParams::* field, const Vector& grad) {
        for (std::size_t i = 0; i < (f.params.gru.*field).size(); ++i) {
            DecoderParams pp = f.params, pm = f.params;
            (pp.gru.*field)[i] += h;
            (pm.gru.*field)[i] -= h;
            push(grad[i], (loss(pp, f.embeddings, z) - loss(pm, f.embeddings, z)) / (2 * h));
        }
    };
    check_gru_matrix(&GruParams::w_update, grads.gru.w_update);
    check_gru_matrix(&GruParams::w_reset, grads.gru.w_reset);
    check_gru_matrix(&GruParams::w_cand, grads.gru.w_cand);
    check_gru_matrix(&GruParams::u_update, grads.gru.u_update);
    check_gru_matrix(&GruParams::u_reset, grads.gru.u_reset);
    check_gru_matrix(&GruParams::u_cand, grads.gru.u_cand);
    check_gru_vector(&GruParams::b_update, grads.gru.b_update);
    check_gru_vector(&GruParams::b_reset, grads.gru.b_reset);
    check_gru_vector(&GruParams::b_cand, grads.gru.b_cand);
    check_matrix(&DecoderParams::out_weight, grads.out_weight);
    for (std::size_t i = 0; i < f.params.out_bias.size(); ++i) {
        DecoderParams pp = f.params, pm = f.params;
        pp.out_bias[i] += h;
        pm.out_bias[i] -= h;
        push(grads.out_bias[i], (loss(pp, f.embeddings, z) - loss(pm, f.embeddings, z)) / (2 * h));
    }
    for (std::size_t i = 0; i < f.embeddings.data.size(); ++i) {
        if (i / f.embeddings.cols == static_cast<std::size_t>(Vocabulary::pad_id)) continue;
        Matrix ep = f.embeddings, em = f.embeddings;
        ep.data[i] += h;
        em.data[i] -= h;
        push(emb_grads.data[i], (loss(f.params, ep, z) - loss(f.params, em, z)) / (2 * h));
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
        Vector zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        push(d_z[i], (loss(f.params, f.embeddings, zp) - loss(f.params, f.embeddings, zm)) / (2 * h));
    }

    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    EXPECT_LT(std::sqrt(diff), 1e-5 * std::max({1.0, std::sqrt(na), std::sqrt(nn)}));
}

// A decoder trained to convergence on a 5-sentence corpus reproduces each
// sentence exactly from its own (fixed, distinct) feature vector.
TEST(DecoderTraining, MemorizesFiveSentences) {
    Vocabulary vocab;
    const std::vector<std::string> sentences = {
        "this movie is great", "that phone was bad", "i love this film",
        "the screen looks awful", "what a nice day"};
    std::vector<std::vector<int>> gold;
    for (const auto& s : sentences) {
        std::vector<int> ids;
        for (const auto& t : tokenize(s)) ids.push_back(vocab.add(t));
        ids.push_back(Vocabulary::eos_id);
        gold.push_back(ids);
    }

    DecoderConfig cfg;
    cfg.state_dim = 8;
    cfg.embed_dim = 6;
    cfg.max_len = 10;
    Rng rng(29);
    Matrix embeddings(vocab.size(), cfg.embed_dim);
    for (double& x : embeddings.data) x = rng.normal(0.0, 0.4);
    DecoderParams params = DecoderParams::random_init(cfg, vocab.size(), rng, 0.3);

    std::vector<Vector> features;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        Vector z(cfg.state_dim);
        for (double& v : z) v = rng.normal();
        features.push_back(z);
    }

    SgdConfig opt;
    opt.learning_rate = 5e-3;
    OptimizerState state;
    for (int step = 0; step < 1500; ++step) {
        DecoderParams grads = DecoderParams::zeros(cfg, vocab.size());
        Matrix emb_grads(vocab.size(), cfg.embed_dim);
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const TeacherForced tf =
                decode_teacher_forced(features[i], gold[i], params, cfg, embeddings);
            decoder_backward(gold[i], params, cfg, embeddings, tf, 1.0 / gold.size(), grads,
                             emb_grads, /*update_embeddings=*/false);
        }
        std::vector<std::span<double>> pv, gv;
        auto collect = [](DecoderParams& p, std::vector<std::span<double>>& out) {
            for (Matrix* m : {&p.gru.w_update, &p.gru.w_reset, &p.gru.w_cand, &p.gru.u_update,
                              &p.gru.u_reset, &p.gru.u_cand, &p.out_weight})
                out.emplace_back(m->data.data(), m->data.size());
            for (Vector* v : {&p.gru.b_update, &p.gru.b_reset, &p.gru.b_cand, &p.out_bias})
                out.emplace_back(v->data(), v->size());
        };
        collect(params, pv);
        collect(grads, gv);
        Vector flat_p = flatten(pv), flat_g = flatten(gv);
        sgd_step(flat_p, flat_g, state, opt);
        unflatten(flat_p, pv);
    }

    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto decoded = decode_greedy(features[i], params, cfg, embeddings, vocab);
        std::vector<int> expected(gold[i].begin(), gold[i].end() - 1); // drop EOS
        EXPECT_EQ(decoded, expected) << sentences[i];
    }
}
