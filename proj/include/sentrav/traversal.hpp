#pragma once

// Latent-space traversal: moves a feature vector from its own sentiment
// distribution toward the opposite one by minimizing the kernel witness
// under a quadratic budget penalty on the displacement.

#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "sentrav/errors.hpp"
#include "sentrav/kernels.hpp"
#include "sentrav/numerics.hpp"
#include "sentrav/optim.hpp"

namespace sentrav {

struct TraversalProblem {
    Vector z;          // the vector to move
    SampleSet source;  // same sentiment as z
    SampleSet target;  // opposite sentiment
    double lambda = 7e-5; // budget of change, >= 0
    KernelConfig kernel;

    void validate() const {
        source.validate();
        target.validate();
        kernel.validate();
        if (lambda < 0.0) throw InputError("TraversalProblem: lambda must be >= 0");
        if (source.dim() != z.size() || target.dim() != z.size())
            throw ShapeError("TraversalProblem: dimension mismatch");
    }
};

struct TraversalResult {
    Vector z_star;           // z + basis * coeffs
    Vector coeffs;           // length n_target + n_source + 1
    double objective_value = 0.0;
    double displacement_norm = 0.0; // ||z_star - z||
    double witness_before = 0.0;
    double witness_after = 0.0;
    std::size_t iterations = 0;
};

// Columns: target vectors in order, then source vectors, then z itself.
// The displacement is constrained to this column space.
inline Matrix build_basis(const TraversalProblem& p) {
    p.validate();
    const std::size_t d = p.z.size();
    const std::size_t n_cols = p.target.size() + p.source.size() + 1;
    Matrix v(d, n_cols);
    std::size_t col = 0;
    for (const auto& t : p.target.points) {
        for (std::size_t i = 0; i < d; ++i) v(i, col) = t[i];
        ++col;
    }
    for (const auto& s : p.source.points) {
        for (std::size_t i = 0; i < d; ++i) v(i, col) = s[i];
        ++col;
    }
    for (std::size_t i = 0; i < d; ++i) v(i, col) = p.z[i];
    return v;
}

// Applies basis * coeffs without forming intermediate copies.
inline Vector basis_apply(const Matrix& basis, const Vector& coeffs) {
    return matvec(basis, coeffs);
}

// Minimizes  g(c) = witness(z + V c) + lambda * ||V c||^2  over the
// coefficient vector c, starting from c = 0, with BFGS.
inline TraversalResult traverse(const TraversalProblem& problem, const BfgsConfig& bfgs = {}) {
    problem.validate();
    const Matrix basis = build_basis(problem);
    const std::size_t n_coeffs = basis.cols;

    auto point_at = [&](const Vector& c) {
        Vector zc = matvec(basis, c);
        axpy(1.0, problem.z, zc);
        return zc;
    };

    auto objective = [&](const Vector& c) {
        const Vector zc = point_at(c);
        const Vector disp = vec_sub(zc, problem.z);
        return witness(zc, problem.source, problem.target, problem.kernel) +
               problem.lambda * dot(disp, disp);
    };

    // grad g = V^T grad_witness(z + Vc) + 2 lambda V^T V c
    auto gradient = [&](const Vector& c) {
        const Vector zc = point_at(c);
        Vector gz = witness_grad(zc, problem.source, problem.target, problem.kernel);
        const Vector disp = vec_sub(zc, problem.z);
        axpy(2.0 * problem.lambda, disp, gz);
        return matvec_t(basis, gz);
    };

    const Vector c0(n_coeffs, 0.0);
    const BfgsResult opt = bfgs_minimize(objective, gradient, c0, bfgs);

    TraversalResult result;
    result.coeffs = opt.x_min;
    result.z_star = point_at(opt.x_min);
    result.objective_value = opt.f_min;
    result.displacement_norm = norm2(vec_sub(result.z_star, problem.z));
    result.witness_before = witness(problem.z, problem.source, problem.target, problem.kernel);
    result.witness_after = witness(result.z_star, problem.source, problem.target, problem.kernel);
    result.iterations = opt.iterations;
    return result;
}

struct TraversalReport {
    double witness_before = 0.0;
    double witness_after = 0.0;
    double displacement_norm = 0.0;
    double coeff_norm = 0.0;
    double objective_value = 0.0;
    std::size_t iterations = 0;
};

inline TraversalReport traversal_report(const TraversalResult& r) {
    TraversalReport rep;
    rep.witness_before = r.witness_before;
    rep.witness_after = r.witness_after;
    rep.displacement_norm = r.displacement_norm;
    rep.coeff_norm = norm2(r.coeffs);
    rep.objective_value = r.objective_value;
    rep.iterations = r.iterations;
    return rep;
}

inline std::string traversal_report_csv_header() {
    return "witness_before,witness_after,displacement,coeff_norm,objective,iterations";
}

inline std::string traversal_report_csv_row(const TraversalReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%zu", r.witness_before,
                  r.witness_after, r.displacement_norm, r.coeff_norm, r.objective_value,
                  r.iterations);
    return buf;
}

inline TraversalReport parse_traversal_report_csv_row(const std::string& row) {
    std::istringstream in(row);
    TraversalReport r;
    char comma = ',';
    if (!(in >> r.witness_before >> comma >> r.witness_after >> comma >> r.displacement_norm >>
          comma >> r.coeff_norm >> comma >> r.objective_value >> comma >> r.iterations))
        throw FormatError("traversal report: malformed CSV row: " + row);
    return r;
}

} // namespace sentrav
