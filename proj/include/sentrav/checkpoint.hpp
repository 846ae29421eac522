#pragma once

// Single-file binary checkpoint: params, vocabulary, configs, and training
// metadata. Explicit little-endian layout with length-prefixed sections so
// a load(save(x)) round trip is bit-exact regardless of platform.
//
//   magic "SNTRVCKP" | u32 version | sections
//   section := u32 tag | u64 payload_len | payload
//   tags: 1 config, 2 vocabulary, 3 embeddings, 4 encoder, 5 decoder, 6 meta
//   integers little-endian; doubles stored as their IEEE-754 bit pattern (u64)

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "sentrav/errors.hpp"
#include "sentrav/fileio.hpp"
#include "sentrav/model.hpp"

namespace sentrav {

struct TrainMeta {
    std::uint32_t phase1_epochs = 0;
    std::uint32_t phase2_epochs = 0;
    std::uint32_t retrain_epochs = 0;
    std::uint64_t seed = 0;
    double final_test_accuracy = 0.0;
    double final_recon_token_accuracy = 0.0;
    std::vector<double> phase1_loss_curve;
};

struct Checkpoint {
    static constexpr std::uint32_t current_version = 1;

    Model model;
    double default_lambda = 7e-5;
    double default_sigma = 0.0; // 0 means "use the median heuristic"
    std::uint32_t default_set_size = 90;
    TrainMeta meta;
};

namespace ckpt_detail {

constexpr char magic[8] = {'S', 'N', 'T', 'R', 'V', 'C', 'K', 'P'};

class Writer {
  public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void bytes(const std::string& s) { buf_.append(s); }
    void vec(const Vector& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void mat(const Matrix& m) {
        u64(m.rows);
        u64(m.cols);
        for (double x : m.data) f64(x);
    }
    std::string take() { return std::move(buf_); }
    const std::string& view() const { return buf_; }

  private:
    std::string buf_;
};

class Reader {
  public:
    Reader(const char* data, std::size_t len) : data_(data), len_(len) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() {
        const char* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const char* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    std::string str(std::size_t n) { return std::string(take(n), n); }
    Vector vec() {
        const std::uint64_t n = u64();
        Vector v(check_count(n));
        for (auto& x : v) x = f64();
        return v;
    }
    Matrix mat() {
        const std::uint64_t r = u64();
        const std::uint64_t c = u64();
        if (c != 0 && r > len_ / c) throw FormatError("checkpoint: matrix size overflows payload");
        Matrix m(check_count(r), check_count(c));
        for (auto& x : m.data) x = f64();
        return m;
    }
    bool done() const { return pos_ == len_; }
    std::size_t remaining() const { return len_ - pos_; }

  private:
    std::size_t check_count(std::uint64_t n) {
        if (n > len_) throw FormatError("checkpoint: count exceeds payload size");
        return static_cast<std::size_t>(n);
    }
    const char* take(std::size_t n) {
        if (pos_ + n > len_) throw FormatError("checkpoint: truncated file");
        const char* p = data_ + pos_;
        pos_ += n;
        return p;
    }
    const char* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

inline void write_section(Writer& out, std::uint32_t tag, Writer& payload) {
    const std::string body = payload.take();
    out.u32(tag);
    out.u64(body.size());
    out.bytes(body);
}

} // namespace ckpt_detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
    using ckpt_detail::Writer;
    Writer out;
    out.bytes(std::string(ckpt_detail::magic, 8));
    out.u32(Checkpoint::current_version);

    {
        Writer w;
        w.u32(static_cast<std::uint32_t>(ck.model.enc_cfg.embed_dim));
        w.u32(static_cast<std::uint32_t>(ck.model.enc_cfg.filter_heights.size()));
        for (std::size_t h : ck.model.enc_cfg.filter_heights) w.u32(static_cast<std::uint32_t>(h));
        w.u32(static_cast<std::uint32_t>(ck.model.enc_cfg.filters_per_height));
        w.u8(static_cast<std::uint8_t>(ck.model.enc_cfg.activation));
        w.u32(static_cast<std::uint32_t>(ck.model.enc_cfg.num_classes));
        w.u32(static_cast<std::uint32_t>(ck.model.dec_cfg.state_dim));
        w.u32(static_cast<std::uint32_t>(ck.model.dec_cfg.embed_dim));
        w.u32(static_cast<std::uint32_t>(ck.model.dec_cfg.max_len));
        w.u8(ck.model.dec_cfg.tie_input_embeddings ? 1 : 0);
        w.f64(ck.default_lambda);
        w.f64(ck.default_sigma);
        w.u32(ck.default_set_size);
        ckpt_detail::write_section(out, 1, w);
    }
    {
        Writer w;
        w.u32(static_cast<std::uint32_t>(ck.model.vocab.size()));
        for (const auto& tok : ck.model.vocab.tokens()) {
            w.u32(static_cast<std::uint32_t>(tok.size()));
            w.bytes(tok);
        }
        ckpt_detail::write_section(out, 2, w);
    }
    {
        Writer w;
        w.mat(ck.model.embeddings);
        ckpt_detail::write_section(out, 3, w);
    }
    {
        Writer w;
        w.u32(static_cast<std::uint32_t>(ck.model.enc.filters.size()));
        for (const auto& f : ck.model.enc.filters) {
            w.mat(f.weight);
            w.f64(f.bias);
        }
        w.mat(ck.model.enc.cls_weight);
        w.vec(ck.model.enc.cls_bias);
        ckpt_detail::write_section(out, 4, w);
    }
    {
        Writer w;
        w.mat(ck.model.dec.gru.w_update);
        w.mat(ck.model.dec.gru.w_reset);
        w.mat(ck.model.dec.gru.w_cand);
        w.mat(ck.model.dec.gru.u_update);
        w.mat(ck.model.dec.gru.u_reset);
        w.mat(ck.model.dec.gru.u_cand);
        w.vec(ck.model.dec.gru.b_update);
        w.vec(ck.model.dec.gru.b_reset);
        w.vec(ck.model.dec.gru.b_cand);
        w.mat(ck.model.dec.out_weight);
        w.vec(ck.model.dec.out_bias);
        ckpt_detail::write_section(out, 5, w);
    }
    {
        Writer w;
        w.u32(ck.meta.phase1_epochs);
        w.u32(ck.meta.phase2_epochs);
        w.u32(ck.meta.retrain_epochs);
        w.u64(ck.meta.seed);
        w.f64(ck.meta.final_test_accuracy);
        w.f64(ck.meta.final_recon_token_accuracy);
        w.vec(ck.meta.phase1_loss_curve);
        ckpt_detail::write_section(out, 6, w);
    }
    return out.take();
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
    using ckpt_detail::Reader;
    Reader top(bytes.data(), bytes.size());
    if (top.str(8) != std::string(ckpt_detail::magic, 8))
        throw FormatError("checkpoint: bad magic");
    const std::uint32_t version = top.u32();
    if (version != Checkpoint::current_version)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ck;
    bool seen[7] = {};
    while (!top.done()) {
        const std::uint32_t tag = top.u32();
        const std::uint64_t len = top.u64();
        if (len > top.remaining()) throw FormatError("checkpoint: truncated section");
        const std::string payload = top.str(static_cast<std::size_t>(len));
        Reader r(payload.data(), payload.size());
        switch (tag) {
            case 1: {
                ck.model.enc_cfg.embed_dim = r.u32();
                const std::uint32_t nh = r.u32();
                ck.model.enc_cfg.filter_heights.clear();
                for (std::uint32_t i = 0; i < nh; ++i)
                    ck.model.enc_cfg.filter_heights.push_back(r.u32());
                ck.model.enc_cfg.filters_per_height = r.u32();
                ck.model.enc_cfg.activation = static_cast<Activation>(r.u8());
                ck.model.enc_cfg.num_classes = r.u32();
                ck.model.dec_cfg.state_dim = r.u32();
                ck.model.dec_cfg.embed_dim = r.u32();
                ck.model.dec_cfg.max_len = r.u32();
                ck.model.dec_cfg.tie_input_embeddings = r.u8() != 0;
                ck.default_lambda = r.f64();
                ck.default_sigma = r.f64();
                ck.default_set_size = r.u32();
                break;
            }
            case 2: {
                const std::uint32_t count = r.u32();
                if (count < 4) throw FormatError("checkpoint: vocabulary too small");
                Vocabulary vocab;
                for (std::uint32_t i = 0; i < count; ++i) {
                    const std::uint32_t n = r.u32();
                    const std::string tok = r.str(n);
                    if (i < 4) {
                        if (tok != vocab.token_of(static_cast<int>(i)))
                            throw FormatError("checkpoint: reserved vocabulary entries corrupted");
                    } else if (vocab.add(tok) != static_cast<int>(i)) {
                        throw FormatError("checkpoint: duplicate vocabulary entry '" + tok + "'");
                    }
                }
                ck.model.vocab = std::move(vocab);
                break;
            }
            case 3: ck.model.embeddings = r.mat(); break;
            case 4: {
                const std::uint32_t nf = r.u32();
                ck.model.enc.filters.clear();
                for (std::uint32_t i = 0; i < nf; ++i) {
                    ConvFilter f;
                    f.weight = r.mat();
                    f.bias = r.f64();
                    ck.model.enc.filters.push_back(std::move(f));
                }
                ck.model.enc.cls_weight = r.mat();
                ck.model.enc.cls_bias = r.vec();
                break;
            }
            case 5: {
                ck.model.dec.gru.w_update = r.mat();
                ck.model.dec.gru.w_reset = r.mat();
                ck.model.dec.gru.w_cand = r.mat();
                ck.model.dec.gru.u_update = r.mat();
                ck.model.dec.gru.u_reset = r.mat();
                ck.model.dec.gru.u_cand = r.mat();
                ck.model.dec.gru.b_update = r.vec();
                ck.model.dec.gru.b_reset = r.vec();
                ck.model.dec.gru.b_cand = r.vec();
                ck.model.dec.out_weight = r.mat();
                ck.model.dec.out_bias = r.vec();
                break;
            }
            case 6: {
                ck.meta.phase1_epochs = r.u32();
                ck.meta.phase2_epochs = r.u32();
                ck.meta.retrain_epochs = r.u32();
                ck.meta.seed = r.u64();
                ck.meta.final_test_accuracy = r.f64();
                ck.meta.final_recon_token_accuracy = r.f64();
                ck.meta.phase1_loss_curve = r.vec();
                break;
            }
            default: throw FormatError("checkpoint: unknown section tag " + std::to_string(tag));
        }
        if (!r.done()) throw FormatError("checkpoint: trailing bytes in section " + std::to_string(tag));
        if (tag < 7) seen[tag] = true;
    }
    for (std::uint32_t tag = 1; tag <= 6; ++tag)
        if (!seen[tag]) throw FormatError("checkpoint: missing section " + std::to_string(tag));

    ck.model.validate();
    return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    write_file_atomic(path, serialize_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::string& path) {
    return deserialize_checkpoint(read_file(path));
}

} // namespace sentrav
