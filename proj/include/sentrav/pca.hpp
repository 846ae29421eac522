#pragma once

// Principal component projection to 2 dimensions for cluster diagnostics.
// Covariance uses 1/(N-1); the eigensolver is a cyclic Jacobi sweep, which
// is deterministic and plenty fast at the dimensions used here.

#include <cmath>
#include <cstddef>
#include <vector>

#include "sentrav/errors.hpp"
#include "sentrav/kernels.hpp"
#include "sentrav/numerics.hpp"

namespace sentrav {

struct Projection {
    Vector mean;        // dim d
    Matrix components;  // 2 x d, orthonormal rows, variance-ordered
    double explained_variance[2] = {0.0, 0.0};
};

namespace pca_detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues in `values` and eigenvectors as columns of `vectors`.
inline void jacobi_eigen_symmetric(Matrix a, Vector& values, Matrix& vectors) {
    const std::size_t n = a.rows;
    vectors = identity_matrix(n);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-24) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vectors(k, p), vkq = vectors(k, q);
                    vectors(k, p) = c * vkp - s * vkq;
                    vectors(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    values.resize(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
}

} // namespace pca_detail

// Fits mean + top-2 principal components. Sign convention: the
// largest-magnitude entry of each component is positive.
inline Projection fit_pca(const SampleSet& points) {
    points.validate();
    if (points.size() < 3) throw InputError("fit_pca: need at least 3 points");
    const std::size_t d = points.dim();
    if (d < 2) throw InputError("fit_pca: need dimension >= 2");
    const std::size_t n = points.size();

    Projection proj;
    proj.mean.assign(d, 0.0);
    for (const auto& p : points.points) axpy(1.0, p, proj.mean);
    for (double& m : proj.mean) m /= static_cast<double>(n);

    Matrix cov(d, d);
    for (const auto& p : points.points) {
        const Vector c = vec_sub(p, proj.mean);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) cov(i, j) += c[i] * c[j];
    }
    const double norm = 1.0 / static_cast<double>(n - 1);
    double total_var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) *= norm;
            cov(j, i) = cov(i, j);
        }
        total_var += cov(i, i);
    }
    if (total_var <= 0.0) throw InputError("fit_pca: degenerate data (all points equal)");

    Vector values;
    Matrix vectors;
    pca_detail::jacobi_eigen_symmetric(cov, values, vectors);

    // Top-2 eigenvalues; ties resolved by original index order.
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < d; ++i)
        if (values[i] > values[i0]) i0 = i;
    std::size_t i1 = (i0 == 0) ? 1 : 0;
    for (std::size_t i = 0; i < d; ++i)
        if (i != i0 && values[i] > values[i1]) i1 = i;

    proj.components = Matrix(2, d);
    const std::size_t picks[2] = {i0, i1};
    for (std::size_t r = 0; r < 2; ++r) {
        std::size_t max_j = 0;
        for (std::size_t j = 0; j < d; ++j) {
            proj.components(r, j) = vectors(j, picks[r]);
            if (std::abs(proj.components(r, j)) > std::abs(proj.components(r, max_j))) max_j = j;
        }
        if (proj.components(r, max_j) < 0.0)
            for (std::size_t j = 0; j < d; ++j) proj.components(r, j) = -proj.components(r, j);
        proj.explained_variance[r] = std::max(0.0, values[picks[r]]);
    }
    return proj;
}

struct ProjectedPoint {
    double pc1 = 0.0;
    double pc2 = 0.0;
};

inline ProjectedPoint project_point(const Vector& point, const Projection& proj) {
    if (point.size() != proj.mean.size()) throw ShapeError("project_point: dim mismatch");
    const Vector c = vec_sub(point, proj.mean);
    ProjectedPoint out;
    for (std::size_t j = 0; j < c.size(); ++j) {
        out.pc1 += proj.components(0, j) * c[j];
        out.pc2 += proj.components(1, j) * c[j];
    }
    return out;
}

inline std::vector<ProjectedPoint> project(const SampleSet& points, const Projection& proj) {
    points.validate();
    std::vector<ProjectedPoint> out;
    out.reserve(points.size());
    for (const auto& p : points.points) out.push_back(project_point(p, proj));
    return out;
}

} // namespace sentrav
