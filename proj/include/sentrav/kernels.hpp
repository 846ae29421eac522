#pragma once

// Gaussian kernel, the empirical MMD statistic, and the witness function
// with its analytic gradient.
//
// NOTE on the bandwidth convention: k(x,y) = exp(-|x-y|^2 / (2*sigma)).
// The exponent divides by 2*sigma, NOT 2*sigma^2, so sigma carries units
// of squared distance. median_heuristic_sigma follows the same convention.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sentrav/errors.hpp"
#include "sentrav/numerics.hpp"

namespace sentrav {

struct KernelConfig {
    double sigma = 1.0; // bandwidth, units of squared distance

    void validate() const {
        if (!(sigma > 0.0)) throw InputError("KernelConfig: sigma must be positive");
    }
};

struct SampleSet {
    std::vector<Vector> points;

    SampleSet() = default;
    explicit SampleSet(std::vector<Vector> pts) : points(std::move(pts)) {}

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    std::size_t dim() const {
        if (points.empty()) throw InputError("SampleSet: empty");
        return points.front().size();
    }

    void validate() const {
        if (points.empty()) throw InputError("SampleSet: empty");
        const std::size_t d = points.front().size();
        for (const auto& p : points)
            if (p.size() != d) throw ShapeError("SampleSet: inconsistent dimensions");
    }
};

inline double squared_distance(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw ShapeError("squared_distance: dim mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

inline double gaussian_kernel(const Vector& x, const Vector& y, const KernelConfig& cfg) {
    cfg.validate();
    return std::exp(-squared_distance(x, y) / (2.0 * cfg.sigma));
}

// f*(z) = mean_i k(source_i, z) - mean_j k(target_j, z).
// Large positive near source mass, negative near target mass.
inline double witness(const Vector& point, const SampleSet& source, const SampleSet& target,
                      const KernelConfig& cfg) {
    source.validate();
    target.validate();
    cfg.validate();
    double s = 0.0;
    for (const auto& x : source.points) s += gaussian_kernel(x, point, cfg);
    s /= static_cast<double>(source.size());
    double t = 0.0;
    for (const auto& y : target.points) t += gaussian_kernel(y, point, cfg);
    t /= static_cast<double>(target.size());
    return s - t;
}

// grad f*(u) = mean_i k(x_i,u)(x_i-u)/sigma - mean_j k(y_j,u)(y_j-u)/sigma
inline Vector witness_grad(const Vector& point, const SampleSet& source, const SampleSet& target,
                           const KernelConfig& cfg) {
    source.validate();
    target.validate();
    cfg.validate();
    Vector g(point.size(), 0.0);
    const double ms = 1.0 / (static_cast<double>(source.size()) * cfg.sigma);
    for (const auto& x : source.points) {
        const double k = gaussian_kernel(x, point, cfg);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += ms * k * (x[i] - point[i]);
    }
    const double mt = 1.0 / (static_cast<double>(target.size()) * cfg.sigma);
    for (const auto& y : target.points) {
        const double k = gaussian_kernel(y, point, cfg);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= mt * k * (y[i] - point[i]);
    }
    return g;
}

// Biased squared-MMD estimator, computed as the difference of witness means:
// mean_i f*(x_i) - mean_j f*(y_j).
inline double mmd(const SampleSet& source, const SampleSet& target, const KernelConfig& cfg) {
    source.validate();
    target.validate();
    double a = 0.0;
    for (const auto& x : source.points) a += witness(x, source, target, cfg);
    a /= static_cast<double>(source.size());
    double b = 0.0;
    for (const auto& y : target.points) b += witness(y, source, target, cfg);
    b /= static_cast<double>(target.size());
    return a - b;
}

// sigma = median pairwise squared distance / 2; falls back to 1.0 when the
// median is zero (all points coincide).
inline double median_heuristic_sigma(const SampleSet& points) {
    points.validate();
    if (points.size() < 2) throw InputError("median_heuristic_sigma: need at least 2 points");
    std::vector<double> d2;
    d2.reserve(points.size() * (points.size() - 1) / 2);
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            d2.push_back(squared_distance(points.points[i], points.points[j]));
    std::sort(d2.begin(), d2.end());
    const std::size_t k = d2.size();
    const double median = (k % 2 == 1) ? d2[k / 2] : 0.5 * (d2[k / 2 - 1] + d2[k / 2]);
    if (median <= 0.0) return 1.0;
    return median / 2.0;
}

} // namespace sentrav
