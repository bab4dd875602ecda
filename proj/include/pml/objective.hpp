#pragma once

#include <cmath>
#include <vector>

#include "pml/dataset.hpp"
#include "pml/metric.hpp"

namespace pml {

/// Global decision threshold for the baseline: a fixed value, or the mean
/// squared Euclidean distance over the training pairs.
struct SigmaPolicy {
    enum class Kind { MeanEuclidean, Fixed };
    Kind kind = Kind::MeanEuclidean;
    double value = 1.0;
};

struct HyperParams {
    double lambda = 1e-3;  // weight of the privileged-metric regularizer
    double r = 3.0;        // view-weight exponent, must be > 1
    SigmaPolicy global_sigma;  // baseline only
};

/// Simplex-constrained per-view weights a_m.
struct ViewWeights {
    std::vector<double> a;

    std::size_t size() const { return a.size(); }
    double operator[](std::size_t m) const { return a[m]; }
};

/// Overflow-safe log loss L(u) = ln(1 + exp(-u)).
inline double log_loss(double u) {
    return std::max(-u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

/// 1 / (1 + exp(u)) without overflow; this is the loss-derivative magnitude
/// at margin u.
inline double inv_one_plus_exp(double u) {
    if (u > 0.0) {
        const double e = std::exp(-u);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(u));
}

/// Local decision value f = beta * d_P^2 - d_M^2; positive means "similar".
inline double decision_local(double d_orig_sq, double d_priv_sq, double beta) {
    return beta * d_priv_sq - d_orig_sq;
}

/// Global-threshold decision value f = sigma - d_M^2.
inline double decision_global(double d_orig_sq, double sigma) {
    return sigma - d_orig_sq;
}

/// R(P) = ||P||_F^2 / dim.
inline double regularizer(const PsdMetric& p) {
    return p.matrix().squaredNorm() / static_cast<double>(p.dim());
}

/// Weighted empirical loss sum_i w_i L(y_i (thr_i - d2_i)) over the fixed
/// block partition. This single kernel backs the privileged objective, the
/// baseline objective, and every step-acceptance check, so comparisons
/// between them are over identically computed values.
inline double weighted_pair_loss(const Vector& labels, const Vector& weights,
                                 const Vector& thresholds, const Vector& d2) {
    const std::size_t n = static_cast<std::size_t>(labels.size());
    return block_reduce<double>(
        n, 0.0,
        [&](std::size_t begin, std::size_t end) {
            double acc = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                const Eigen::Index k = static_cast<Eigen::Index>(i);
                acc += weights[k] * log_loss(labels[k] * (thresholds[k] - d2[k]));
            }
            return acc;
        },
        [](double x, double y) { return x + y; });
}

/// F_m for one view: empirical loss with the local thresholds beta * d_P^2
/// plus lambda * R(P). The view weight factor a_m^r is applied by the caller.
inline double partial_objective(const MultiViewPairSet& set, std::size_t view_index,
                                const PsdMetric& metric, const PsdMetric& p, double beta,
                                const HyperParams& hp) {
    if (view_index >= set.n_views()) throw ContractViolation("partial_objective: view index out of range");
    const Vector d2 = rowwise_metric_sq(set.view_diffs[view_index], metric.matrix());
    const Vector dp = rowwise_metric_sq(set.priv_diffs, p.matrix());
    return weighted_pair_loss(set.labels, set.weights, beta * dp, d2) + hp.lambda * regularizer(p);
}

/// Full multi-view objective J = sum_m a_m^r F_m.
inline double objective_mv(const MultiViewPairSet& set, const std::vector<PsdMetric>& metrics,
                           const PsdMetric& p, const ViewWeights& weights, const ScaleParams& betas,
                           const HyperParams& hp) {
    if (metrics.size() != set.n_views() || weights.size() != set.n_views() ||
        betas.betas.size() != set.n_views())
        throw ContractViolation("objective_mv: argument view counts disagree");
    double total = 0.0;
    for (std::size_t m = 0; m < set.n_views(); ++m) {
        total += std::pow(weights[m], hp.r) *
                 partial_objective(set, m, metrics[m], p, betas.betas[m], hp);
    }
    return total;
}

}  // namespace pml
