#pragma once

// Dense double-precision tensor arithmetic with hand-written backward
// functions for every forward op. Everything here is a pure function;
// the training pipeline composes the backward calls itself.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sentrav/errors.hpp"

namespace sentrav {

using Vector = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols)
            throw ShapeError("Matrix: data length " + std::to_string(data.size()) +
                             " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline Matrix identity_matrix(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) {
    for (double x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeError("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw ShapeError("axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector scaled(const Vector& x, double alpha) {
    Vector r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i];
    return r;
}

inline Vector vec_add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeError("vec_add: size mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vector vec_sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeError("vec_sub: size mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                         " times " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

// dC -> (dA, dB) for C = A*B.
struct MatmulGrads {
    Matrix d_a;
    Matrix d_b;
};

inline MatmulGrads matmul_backward(const Matrix& a, const Matrix& b, const Matrix& d_c) {
    if (d_c.rows != a.rows || d_c.cols != b.cols)
        throw ShapeError("matmul_backward: upstream shape mismatch");
    MatmulGrads g{Matrix(a.rows, a.cols), Matrix(b.rows, b.cols)};
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            const double d = d_c(i, j);
            if (d == 0.0) continue;
            for (std::size_t k = 0; k < a.cols; ++k) {
                g.d_a(i, k) += d * b(k, j);
                g.d_b(k, j) += d * a(i, k);
            }
        }
    return g;
}

inline Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols != v.size()) throw ShapeError("matvec: size mismatch");
    Vector r(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

// M^T * v
inline Vector matvec_t(const Matrix& m, const Vector& v) {
    if (m.rows != v.size()) throw ShapeError("matvec_t: size mismatch");
    Vector r(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        for (std::size_t j = 0; j < m.cols; ++j) r[j] += m(i, j) * vi;
    }
    return r;
}

// A += alpha * x y^T
inline void outer_add(Matrix& a, double alpha, const Vector& x, const Vector& y) {
    if (a.rows != x.size() || a.cols != y.size()) throw ShapeError("outer_add: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = alpha * x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < y.size(); ++j) a(i, j) += xi * y[j];
    }
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

enum class Activation { identity, relu, tanh_act };

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh_act: return std::tanh(x);
    }
    return x;
}

// Derivative w.r.t. the pre-activation value. relu'(0) := 0.
inline double activate_deriv(Activation a, double pre) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::tanh_act: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
    }
    return 1.0;
}

inline std::string activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh_act: return "tanh";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh_act;
    throw InputError("unknown activation: " + s);
}

// ---------------------------------------------------------------------------
// Full-width convolution over sentence positions
// ---------------------------------------------------------------------------

// out[t] = act( sum_{i<h, j<d} sentence[t+i][j] * filter[i][j] + bias ),
// t = 0..L-h. The filter spans the full embedding width.
inline Vector conv_full_width(const Matrix& sentence, const Matrix& filter, double bias,
                              Activation act = Activation::identity) {
    if (filter.cols != sentence.cols)
        throw ShapeError("conv_full_width: filter width " + std::to_string(filter.cols) +
                         " != embedding dim " + std::to_string(sentence.cols));
    if (filter.rows > sentence.rows)
        throw ShapeError("conv_full_width: filter height " + std::to_string(filter.rows) +
                         " exceeds sentence length " + std::to_string(sentence.rows));
    const std::size_t h = filter.rows, d = filter.cols;
    const std::size_t n_out = sentence.rows - h + 1;
    Vector out(n_out);
    for (std::size_t t = 0; t < n_out; ++t) {
        double s = bias;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < d; ++j) s += sentence(t + i, j) * filter(i, j);
        out[t] = activate(act, s);
    }
    return out;
}

struct ConvGrads {
    Matrix d_sentence;
    Matrix d_filter;
    double d_bias = 0.0;
};

// Backward for conv_full_width; recomputes the pre-activations internally.
inline ConvGrads conv_full_width_backward(const Matrix& sentence, const Matrix& filter,
                                          double bias, Activation act, const Vector& d_out) {
    if (filter.cols != sentence.cols || filter.rows > sentence.rows)
        throw ShapeError("conv_full_width_backward: shape mismatch");
    const std::size_t h = filter.rows, d = filter.cols;
    const std::size_t n_out = sentence.rows - h + 1;
    if (d_out.size() != n_out) throw ShapeError("conv_full_width_backward: upstream length mismatch");

    ConvGrads g{Matrix(sentence.rows, sentence.cols), Matrix(h, d), 0.0};
    for (std::size_t t = 0; t < n_out; ++t) {
        if (d_out[t] == 0.0) continue;
        double pre = bias;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < d; ++j) pre += sentence(t + i, j) * filter(i, j);
        const double gd = d_out[t] * activate_deriv(act, pre);
        g.d_bias += gd;
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                g.d_filter(i, j) += gd * sentence(t + i, j);
                g.d_sentence(t + i, j) += gd * filter(i, j);
            }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Max-over-time pooling
// ---------------------------------------------------------------------------

struct MaxOverTime {
    double value = 0.0;
    std::size_t index = 0; // first-occurring max; gradient routes here only
};

inline MaxOverTime max_over_time(const Vector& v) {
    if (v.empty()) throw ShapeError("max_over_time: empty vector");
    MaxOverTime r{v[0], 0};
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > r.value) {
            r.value = v[i];
            r.index = i;
        }
    return r;
}

inline Vector max_over_time_backward(std::size_t len, std::size_t argmax, double d_value) {
    if (argmax >= len) throw IndexError("max_over_time_backward: argmax out of range");
    Vector g(len, 0.0);
    g[argmax] = d_value;
    return g;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy
// ---------------------------------------------------------------------------

inline Vector softmax(const Vector& logits) {
    if (logits.empty()) throw ShapeError("softmax: empty logits");
    const double mx = *std::max_element(logits.begin(), logits.end());
    Vector p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

struct SoftmaxCrossEntropy {
    double loss = 0.0;
    Vector grad; // softmax(logits) - one_hot(target); gradient of loss w.r.t. logits
};

inline SoftmaxCrossEntropy softmax_cross_entropy(const Vector& logits, std::size_t target) {
    if (target >= logits.size())
        throw IndexError("softmax_cross_entropy: target " + std::to_string(target) +
                         " out of range " + std::to_string(logits.size()));
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    SoftmaxCrossEntropy r;
    r.loss = std::log(z) - (logits[target] - mx);
    r.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) r.grad[i] = std::exp(logits[i] - mx) / z;
    r.grad[target] -= 1.0;
    return r;
}

// ---------------------------------------------------------------------------
// GRU cell
// ---------------------------------------------------------------------------

struct GruParams {
    Matrix w_update, w_reset, w_cand;  // input -> state
    Matrix u_update, u_reset, u_cand;  // state -> state
    Vector b_update, b_reset, b_cand;

    static GruParams zeros(std::size_t state_dim, std::size_t input_dim) {
        GruParams p;
        p.w_update = Matrix(state_dim, input_dim);
        p.w_reset = Matrix(state_dim, input_dim);
        p.w_cand = Matrix(state_dim, input_dim);
        p.u_update = Matrix(state_dim, state_dim);
        p.u_reset = Matrix(state_dim, state_dim);
        p.u_cand = Matrix(state_dim, state_dim);
        p.b_update = Vector(state_dim, 0.0);
        p.b_reset = Vector(state_dim, 0.0);
        p.b_cand = Vector(state_dim, 0.0);
        return p;
    }

    std::size_t state_dim() const { return w_update.rows; }
    std::size_t input_dim() const { return w_update.cols; }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// u = sigmoid(Wu x + Uu h + bu); r = sigmoid(Wr x + Ur h + br);
// c = tanh(Wc x + Uc (r.h) + bc); h' = (1-u).h + u.c
inline Vector gru_cell(const Vector& x, const Vector& h_prev, const GruParams& p) {
    if (x.size() != p.input_dim()) throw ShapeError("gru_cell: input dim mismatch");
    if (h_prev.size() != p.state_dim()) throw ShapeError("gru_cell: state dim mismatch");
    const std::size_t n = p.state_dim();

    Vector au = matvec(p.w_update, x), ar = matvec(p.w_reset, x);
    axpy(1.0, matvec(p.u_update, h_prev), au);
    axpy(1.0, matvec(p.u_reset, h_prev), ar);
    Vector u(n), r(n), rh(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = sigmoid(au[i] + p.b_update[i]);
        r[i] = sigmoid(ar[i] + p.b_reset[i]);
        rh[i] = r[i] * h_prev[i];
    }
    Vector ac = matvec(p.w_cand, x);
    axpy(1.0, matvec(p.u_cand, rh), ac);
    Vector h(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = std::tanh(ac[i] + p.b_cand[i]);
        h[i] = (1.0 - u[i]) * h_prev[i] + u[i] * c;
    }
    return h;
}

struct GruBackward {
    Vector d_x;
    Vector d_h_prev;
    GruParams d_params;
};

// Backward for one GRU step; recomputes the gate values from (x, h_prev).
inline GruBackward gru_cell_backward(const Vector& x, const Vector& h_prev, const GruParams& p,
                                     const Vector& d_h) {
    if (x.size() != p.input_dim() || h_prev.size() != p.state_dim() || d_h.size() != p.state_dim())
        throw ShapeError("gru_cell_backward: shape mismatch");
    const std::size_t n = p.state_dim();

    Vector au = matvec(p.w_update, x), ar = matvec(p.w_reset, x);
    axpy(1.0, matvec(p.u_update, h_prev), au);
    axpy(1.0, matvec(p.u_reset, h_prev), ar);
    Vector u(n), r(n), rh(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = sigmoid(au[i] + p.b_update[i]);
        r[i] = sigmoid(ar[i] + p.b_reset[i]);
        rh[i] = r[i] * h_prev[i];
    }
    Vector ac = matvec(p.w_cand, x);
    axpy(1.0, matvec(p.u_cand, rh), ac);
    Vector c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = std::tanh(ac[i] + p.b_cand[i]);

    GruBackward g;
    g.d_x = Vector(x.size(), 0.0);
    g.d_h_prev = Vector(n, 0.0);
    g.d_params = GruParams::zeros(n, x.size());

    Vector d_au(n), d_ar(n), d_ac(n), d_rh(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double du = d_h[i] * (c[i] - h_prev[i]);
        const double dc = d_h[i] * u[i];
        g.d_h_prev[i] += d_h[i] * (1.0 - u[i]);
        d_au[i] = du * u[i] * (1.0 - u[i]);
        d_ac[i] = dc * (1.0 - c[i] * c[i]);
    }
    // candidate path: ac = Wc x + Uc rh + bc
    for (std::size_t i = 0; i < n; ++i) g.d_params.b_cand[i] += d_ac[i];
    outer_add(g.d_params.w_cand, 1.0, d_ac, x);
    outer_add(g.d_params.u_cand, 1.0, d_ac, rh);
    axpy(1.0, matvec_t(p.w_cand, d_ac), g.d_x);
    d_rh = matvec_t(p.u_cand, d_ac);
    for (std::size_t i = 0; i < n; ++i) {
        g.d_h_prev[i] += d_rh[i] * r[i];
        d_ar[i] = d_rh[i] * h_prev[i] * r[i] * (1.0 - r[i]);
    }
    // reset path
    for (std::size_t i = 0; i < n; ++i) g.d_params.b_reset[i] += d_ar[i];
    outer_add(g.d_params.w_reset, 1.0, d_ar, x);
    outer_add(g.d_params.u_reset, 1.0, d_ar, h_prev);
    axpy(1.0, matvec_t(p.w_reset, d_ar), g.d_x);
    axpy(1.0, matvec_t(p.u_reset, d_ar), g.d_h_prev);
    // update path
    for (std::size_t i = 0; i < n; ++i) g.d_params.b_update[i] += d_au[i];
    outer_add(g.d_params.w_update, 1.0, d_au, x);
    outer_add(g.d_params.u_update, 1.0, d_au, h_prev);
    axpy(1.0, matvec_t(p.w_update, d_au), g.d_x);
    axpy(1.0, matvec_t(p.u_update, d_au), g.d_h_prev);

    return g;
}

} // namespace sentrav
