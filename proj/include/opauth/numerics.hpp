#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "opauth/errors.hpp"
#include "opauth/types.hpp"

namespace opauth {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kVarianceFloorAbs = 1e-6;
inline constexpr double kVarianceFloorRel = 1e-3;
inline constexpr double kWeightFloor = 1e-6;
inline constexpr double kReseedResponsibility = 1e-8;

// log(sum(exp(v))), shifted by the max so it never overflows.
inline double log_sum_exp(std::span<const double> values) {
    if (values.empty()) throw UsageError("log_sum_exp: empty input");
    double hi = kNegInf;
    for (double v : values) hi = std::max(hi, v);
    if (std::isinf(hi)) return hi;  // all -inf (or +inf dominates)
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

inline double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

// Diagonal-covariance Gaussian. Variances are kept strictly positive by the
// floor applied wherever components are (re-)estimated.
struct GaussianComponent {
    Vec mean;
    Vec variance;

    std::size_t dim() const { return mean.size(); }
};

inline double gaussian_log_pdf(std::span<const double> x, const GaussianComponent& comp) {
    if (x.size() != comp.mean.size() || comp.mean.size() != comp.variance.size())
        throw UsageError("gaussian_log_pdf: dimension mismatch");
    double log_det = 0.0;
    double maha = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double var = comp.variance[k];
        if (!(var > 0.0)) throw ModelError("gaussian_log_pdf: non-positive variance at channel " + std::to_string(k));
        log_det += std::log(var);
        const double diff = x[k] - comp.mean[k];
        maha += diff * diff / var;
    }
    const double d = static_cast<double>(x.size());
    return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + maha);
}

struct Mixture {
    std::vector<GaussianComponent> components;
    Vec log_weights;

    std::size_t size() const { return components.size(); }
    std::size_t dim() const { return components.empty() ? 0 : components.front().dim(); }

    // Checks the structural invariants; used by model validation.
    std::vector<std::string> violations() const {
        std::vector<std::string> out;
        if (components.empty()) out.push_back("mixture has no components");
        if (log_weights.size() != components.size()) out.push_back("mixture weight/component count mismatch");
        const std::size_t d = dim();
        for (std::size_t m = 0; m < components.size(); ++m) {
            if (components[m].dim() != d || components[m].variance.size() != d)
                out.push_back("component " + std::to_string(m) + " dimension mismatch");
            for (double v : components[m].variance)
                if (!(v > 0.0)) {
                    out.push_back("component " + std::to_string(m) + " has non-positive variance");
                    break;
                }
        }
        double total = 0.0;
        for (double lw : log_weights) total += std::exp(lw);
        if (std::abs(total - 1.0) > 1e-9) out.push_back("mixture weights sum to " + std::to_string(total));
        return out;
    }
};

// log b(x) for a Gaussian mixture, Gaussians combined in log space.
inline double mixture_log_pdf(std::span<const double> x, const Mixture& mix) {
    if (mix.components.empty()) throw UsageError("mixture_log_pdf: empty mixture");
    double best = kNegInf;
    // Two-pass log-sum-exp over at most a handful of components.
    std::vector<double> terms(mix.components.size());
    for (std::size_t m = 0; m < mix.components.size(); ++m) {
        terms[m] = mix.log_weights[m] + gaussian_log_pdf(x, mix.components[m]);
        best = std::max(best, terms[m]);
    }
    if (std::isinf(best)) return best;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    return best + std::log(acc);
}

// Per-channel variance floor: max(1e-6, 1e-3 * global training variance).
inline Vec variance_floor(const Vec& global_variance) {
    Vec floor(global_variance.size());
    for (std::size_t k = 0; k < floor.size(); ++k)
        floor[k] = std::max(kVarianceFloorAbs, kVarianceFloorRel * global_variance[k]);
    return floor;
}

inline void apply_variance_floor(GaussianComponent& comp, const Vec& floor) {
    for (std::size_t k = 0; k < comp.variance.size(); ++k)
        comp.variance[k] = std::max(comp.variance[k], floor[k]);
}

// Pooled per-channel mean/variance of a point set.
inline void pooled_moments(const std::vector<Vec>& points, Vec& mean, Vec& variance) {
    const std::size_t d = points.empty() ? 0 : points.front().size();
    mean.assign(d, 0.0);
    variance.assign(d, 0.0);
    if (points.empty()) return;
    for (const Vec& p : points)
        for (std::size_t k = 0; k < d; ++k) mean[k] += p[k];
    for (std::size_t k = 0; k < d; ++k) mean[k] /= static_cast<double>(points.size());
    for (const Vec& p : points)
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = p[k] - mean[k];
            variance[k] += diff * diff;
        }
    for (std::size_t k = 0; k < d; ++k) variance[k] /= static_cast<double>(points.size());
}

namespace detail {

inline double sq_dist(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed seed;
// runs to a fixed point or 50 iterations.
inline std::vector<Vec> kmeans_seed(const std::vector<Vec>& points, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw UsageError("kmeans_seed: k must be positive");
    if (points.size() < k)
        throw UsageError("kmeans_seed: " + std::to_string(points.size()) + " points for k=" + std::to_string(k));

    std::mt19937_64 rng(seed);
    std::vector<Vec> centers;
    centers.reserve(k);

    // k-means++ initialization.
    std::uniform_int_distribution<std::size_t> first(0, points.size() - 1);
    centers.push_back(points[first(rng)]);
    std::vector<double> d2(points.size());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = detail::sq_dist(points[i], centers[0]);
            for (std::size_t c = 1; c < centers.size(); ++c)
                best = std::min(best, detail::sq_dist(points[i], centers[c]));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            // All remaining mass sits on existing centers; pick any point.
            centers.push_back(points[first(rng)]);
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double cut = u(rng);
        std::size_t pick = points.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            acc += d2[i];
            if (acc >= cut) {
                pick = i;
                break;
            }
        }
        centers.push_back(points[pick]);
    }

    std::vector<std::size_t> assign(points.size(), 0);
    for (int iter = 0; iter < 50; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t best_c = 0;
            double best_d = detail::sq_dist(points[i], centers[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = detail::sq_dist(points[i], centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best_c = c;
                }
            }
            if (assign[i] != best_c) {
                assign[i] = best_c;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        const std::size_t d = points.front().size();
        std::vector<Vec> sums(k, Vec(d, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t c = 0; c < d; ++c) sums[assign[i]][c] += points[i][c];
            ++counts[assign[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Empty cluster: restart it at the point farthest from its
                // current assignment's center.
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const double dd = detail::sq_dist(points[i], centers[assign[i]]);
                    if (dd > far_d) {
                        far_d = dd;
                        far_i = i;
                    }
                }
                centers[c] = points[far_i];
                continue;
            }
            for (std::size_t ch = 0; ch < d; ++ch) centers[c][ch] = sums[c][ch] / static_cast<double>(counts[c]);
        }
    }
    return centers;
}

}  // namespace opauth
