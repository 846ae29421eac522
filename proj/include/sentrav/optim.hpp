#pragma once

// BFGS quasi-Newton minimizer (dense inverse-Hessian, backtracking Armijo
// line search) and the stochastic optimizer used for network training.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "sentrav/errors.hpp"
#include "sentrav/numerics.hpp"

namespace sentrav {

struct BfgsConfig {
    std::size_t max_iters = 200;
    double grad_tol = 1e-6;   // stop when ||grad|| <= grad_tol
    double step_tol = 1e-10;  // stop when ||x_new - x|| < step_tol
    double ls_initial_step = 1.0;
    double ls_shrink = 0.5;
    double ls_armijo_c = 1e-4;
    std::size_t ls_max_backtracks = 60;

    void validate() const {
        if (max_iters == 0) throw InputError("BfgsConfig: max_iters must be positive");
        if (!(grad_tol > 0.0) || !(step_tol > 0.0)) throw InputError("BfgsConfig: tolerances must be positive");
        if (!(ls_shrink > 0.0 && ls_shrink < 1.0)) throw InputError("BfgsConfig: shrink must be in (0,1)");
        if (!(ls_initial_step > 0.0) || !(ls_armijo_c > 0.0)) throw InputError("BfgsConfig: line search params must be positive");
    }
};

struct BfgsResult {
    Vector x_min;
    double f_min = 0.0;
    std::size_t iterations = 0;
    bool converged = false; // gradient tolerance reached
};

// Raised when the objective or gradient turns non-finite; carries the last
// valid iterate so callers can still report a best-effort point.
struct OptimError : Error {
    Vector last_x;
    double last_f;
    OptimError(const std::string& msg, Vector x, double f)
        : Error(msg), last_x(std::move(x)), last_f(f) {}
};

inline BfgsResult bfgs_minimize(const std::function<double(const Vector&)>& objective,
                                const std::function<Vector(const Vector&)>& gradient,
                                const Vector& x0, const BfgsConfig& cfg = {}) {
    cfg.validate();
    const std::size_t n = x0.size();
    if (n == 0) throw InputError("bfgs_minimize: empty start point");
    if (!all_finite(x0)) throw InputError("bfgs_minimize: non-finite start point");

    Vector x = x0;
    double fx = objective(x);
    if (!std::isfinite(fx)) throw OptimError("bfgs_minimize: objective non-finite at start", x, fx);
    Vector gx = gradient(x);
    if (!all_finite(gx)) throw OptimError("bfgs_minimize: gradient non-finite at start", x, fx);

    Matrix h_inv = identity_matrix(n); // inverse-Hessian approximation

    BfgsResult result;
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        if (norm2(gx) <= cfg.grad_tol) {
            result.x_min = x;
            result.f_min = fx;
            result.iterations = it;
            result.converged = true;
            return result;
        }

        Vector p = scaled(matvec(h_inv, gx), -1.0);
        double slope = dot(gx, p);
        if (slope >= 0.0) {
            // H lost positive definiteness numerically; restart from steepest descent.
            h_inv = identity_matrix(n);
            p = scaled(gx, -1.0);
            slope = dot(gx, p);
        }

        // Backtracking line search with the Armijo sufficient-decrease rule.
        double alpha = cfg.ls_initial_step;
        bool accepted = false;
        Vector x_new;
        double f_new = fx;
        for (std::size_t ls = 0; ls < cfg.ls_max_backtracks; ++ls) {
            x_new = x;
            axpy(alpha, p, x_new);
            f_new = objective(x_new);
            if (std::isfinite(f_new) && f_new <= fx + cfg.ls_armijo_c * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= cfg.ls_shrink;
        }
        if (!accepted) {
            // No acceptable step along a descent direction: treat x as converged
            // to the attainable accuracy.
            result.x_min = x;
            result.f_min = fx;
            result.iterations = it;
            result.converged = false;
            return result;
        }

        Vector g_new = gradient(x_new);
        if (!all_finite(g_new) || !std::isfinite(f_new))
            throw OptimError("bfgs_minimize: non-finite value at accepted step", x, fx);

        Vector s = vec_sub(x_new, x);
        Vector y = vec_sub(g_new, gx);
        const double step_norm = norm2(s);

        const double ys = dot(y, s);
        if (ys > 1e-10) {
            // H <- (I - s y^T / ys) H (I - y s^T / ys) + s s^T / ys
            const double rho = 1.0 / ys;
            Vector hy = matvec(h_inv, y);
            const double yhy = dot(y, hy);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    h_inv(i, j) += (1.0 + rho * yhy) * rho * s[i] * s[j]
                                   - rho * (s[i] * hy[j] + hy[i] * s[j]);
                }
        }
        // ys <= threshold: curvature not positive, skip the update to keep H PD.

        x = std::move(x_new);
        fx = f_new;
        gx = std::move(g_new);

        if (step_norm < cfg.step_tol) {
            result.x_min = x;
            result.f_min = fx;
            result.iterations = it + 1;
            result.converged = norm2(gx) <= cfg.grad_tol;
            return result;
        }
    }

    result.x_min = x;
    result.f_min = fx;
    result.iterations = cfg.max_iters;
    result.converged = norm2(gx) <= cfg.grad_tol;
    return result;
}

// ---------------------------------------------------------------------------
// Stochastic training optimizer
// ---------------------------------------------------------------------------

enum class OptimizerKind { sgd, adam };

struct SgdConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 64;
    std::size_t epochs = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate >= 0.0)) throw InputError("SgdConfig: learning rate must be >= 0");
        if (batch_size < 1) throw InputError("SgdConfig: batch size must be >= 1");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw InputError("SgdConfig: moment decays must be in [0,1)");
        if (!(epsilon > 0.0)) throw InputError("SgdConfig: epsilon must be positive");
    }
};

struct OptimizerState {
    std::uint64_t step = 0;
    Vector m; // first moment (adam)
    Vector v; // second moment (adam)
};

// One in-place update of `params` given `grads`. Adaptive-moment state is
// lazily sized on first use.
inline void sgd_step(std::span<double> params, std::span<const double> grads,
                     OptimizerState& state, const SgdConfig& cfg) {
    cfg.validate();
    if (params.size() != grads.size()) throw ShapeError("sgd_step: params/grads length mismatch");

    if (cfg.kind == OptimizerKind::sgd) {
        state.step += 1;
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grads[i];
        return;
    }

    if (state.m.size() != params.size()) {
        if (!state.m.empty()) throw ShapeError("sgd_step: state sized for a different parameter vector");
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

} // namespace sentrav
