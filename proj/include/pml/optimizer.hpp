#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "pml/dataset.hpp"
#include "pml/metric.hpp"
#include "pml/objective.hpp"
#include "pml/pca.hpp"

namespace pml {

/// Dynamic step-size search state for one metric block. Growable states
/// (the view metrics) double the step after an accepted update, bounded by
/// cap_factor times the first accepted step; the privileged metric's step is
/// never enlarged.
struct StepSizeState {
    double eta = 1.0;
    double eta_first = 0.0;  // 0 until the first acceptance
    double cap_factor = 32.0;
    bool growable = true;
};

/// Identifies the privileged-metric block in update events.
constexpr int kPrivilegedBlock = -1;

/// Emitted after every block update attempt inside train().
struct UpdateEvent {
    int iteration;  // outer iteration, 1-based
    int block;      // view index, or kPrivilegedBlock
    const PsdMetric& metric;
    const StepSizeState& state;
    bool stalled;
};

struct TrainConfig {
    HyperParams hp;
    double eta0_m = 1048576.0;  // 2^20
    double eta0_p = 32768.0;    // 2^15
    double cap_s = 32.0;        // 2^5
    int max_iters = 400;
    double rel_tol = 1e-4;
    std::uint64_t seed = 0;
    bool learn_p = true;    // when false P stays at its initial value
    bool use_beta = true;   // when false every beta is 1
    std::optional<std::vector<double>> betas_override;
    std::function<void(const UpdateEvent&)> observer;
};

/// Trained multi-view model. `pca` holds the per-view input transforms when
/// the training pipeline reduced dimensions before learning.
struct ModelMVLDML {
    std::vector<PsdMetric> metrics;
    PsdMetric privileged_metric = PsdMetric::identity(1);
    ViewWeights view_weights;
    ScaleParams betas;
    std::vector<double> history;  // objective value per outer iteration, J0 first
    bool converged = false;
    std::vector<std::optional<PcaTransform>> pca;
};

/// Trained global-threshold baseline.
struct ModelLDML {
    PsdMetric metric = PsdMetric::identity(1);
    double sigma = 1.0;
    std::vector<double> history;
    bool converged = false;
    std::optional<PcaTransform> pca;
};

namespace detail {

/// c_i = scale * w_i * y_i / (1 + exp(y_i (thr_i - d2_i))).
inline Vector loss_grad_coeffs(const Vector& labels, const Vector& weights,
                               const Vector& thresholds, const Vector& d2, double scale) {
    Vector coeffs(labels.size());
    const std::size_t n = static_cast<std::size_t>(labels.size());
    run_blocks(block_count(n), [&](std::size_t b) {
        const std::size_t begin = b * kReduceBlock;
        const std::size_t end = std::min(begin + kReduceBlock, n);
        for (std::size_t i = begin; i < end; ++i) {
            const Eigen::Index k = static_cast<Eigen::Index>(i);
            const double u = labels[k] * (thresholds[k] - d2[k]);
            coeffs[k] = scale * weights[k] * labels[k] * inv_one_plus_exp(u);
        }
    });
    return coeffs;
}

/// sum_i c_i diff_i diff_i^T over the fixed block partition, symmetrized.
inline Matrix weighted_outer_sum(const Matrix& diffs, const Vector& coeffs) {
    const std::size_t n = static_cast<std::size_t>(diffs.rows());
    const Eigen::Index d = diffs.cols();
    Matrix total = block_reduce<Matrix>(
        n, Matrix::Zero(d, d),
        [&](std::size_t begin, std::size_t end) {
            const Eigen::Index b = static_cast<Eigen::Index>(begin);
            const Eigen::Index len = static_cast<Eigen::Index>(end - begin);
            const auto block = diffs.middleRows(b, len);
            return Matrix(block.transpose() * coeffs.segment(b, len).asDiagonal() * block);
        },
        [](const Matrix& x, const Matrix& y) { return Matrix(x + y); });
    return symmetrized(total);
}

}  // namespace detail

/// Gradient of the objective with respect to the view metric M^m.
inline Matrix grad_m(const MultiViewPairSet& set, std::size_t view_index, const PsdMetric& metric,
                     const PsdMetric& p, double beta, const ViewWeights& weights_a,
                     const HyperParams& hp) {
    if (view_index >= set.n_views()) throw ContractViolation("grad_m: view index out of range");
    const Vector dp = rowwise_metric_sq(set.priv_diffs, p.matrix());
    const Vector d2 = rowwise_metric_sq(set.view_diffs[view_index], metric.matrix());
    const double scale = std::pow(weights_a[view_index], hp.r);
    const Vector coeffs = detail::loss_grad_coeffs(set.labels, set.weights, beta * dp, d2, scale);
    return detail::weighted_outer_sum(set.view_diffs[view_index], coeffs);
}

/// Gradient of the objective with respect to the privileged metric P,
/// including the regularizer term 2 (lambda/d*) (sum_m a_m^r) P.
inline Matrix grad_p(const MultiViewPairSet& set, const std::vector<PsdMetric>& metrics,
                     const PsdMetric& p, const ScaleParams& betas, const ViewWeights& weights_a,
                     const HyperParams& hp) {
    if (metrics.size() != set.n_views() || betas.betas.size() != set.n_views() ||
        weights_a.size() != set.n_views())
        throw ContractViolation("grad_p: argument view counts disagree");
    if (set.priv_dim() == 0) throw ContractViolation("grad_p: pair set has no privileged view");

    const Vector dp = rowwise_metric_sq(set.priv_diffs, p.matrix());
    Vector coeffs = Vector::Zero(set.labels.size());
    double scale_sum = 0.0;
    for (std::size_t m = 0; m < set.n_views(); ++m) {
        const double scale = std::pow(weights_a[m], hp.r);
        scale_sum += scale;
        const Vector d2 = rowwise_metric_sq(set.view_diffs[m], metrics[m].matrix());
        coeffs += detail::loss_grad_coeffs(set.labels, set.weights, betas.betas[m] * dp, d2,
                                           -scale * betas.betas[m]);
    }
    const Matrix loss_part = detail::weighted_outer_sum(set.priv_diffs, coeffs);
    const double reg_scale = 2.0 * hp.lambda / static_cast<double>(p.dim()) * scale_sum;
    return loss_part + reg_scale * p.matrix();
}

/// One projected-gradient block update with the dynamic step-size search:
/// halve eta until `accept` (a strict objective decrease with all other
/// blocks fixed) holds; on success grow or carry eta per the state's rule.
/// If eta underflows 1e-30 the block is reported stalled and left unchanged.
struct StepResult {
    PsdMetric metric;
    StepSizeState state;
    bool stalled = false;
};

inline StepResult step_metric(const PsdMetric& current, const Matrix& gradient, StepSizeState state,
                              const std::function<bool(const PsdMetric&)>& accept) {
    const double eta_entry = state.eta;
    double eta = state.eta;
    while (eta >= 1e-30) {
        PsdMetric candidate = psd_project(current.matrix() - eta * gradient);
        if (accept(candidate)) {
            if (state.eta_first == 0.0) state.eta_first = eta;
            state.eta = state.growable ? std::min(2.0 * eta, state.cap_factor * state.eta_first) : eta;
            return {std::move(candidate), state, false};
        }
        eta *= 0.5;
    }
    state.eta = eta_entry;
    return {current, state, true};
}

/// Closed-form simplex minimizer of sum_m a_m^r F_m:
/// a_m proportional to (1/F_m)^(1/(r-1)).
inline ViewWeights solve_view_weights(const std::vector<double>& partials, double r) {
    if (partials.empty()) throw ContractViolation("solve_view_weights: empty partials");
    if (!(r > 1.0)) throw ContractViolation("solve_view_weights: r must be > 1");
    double f_min = partials.front();
    for (double f : partials) {
        if (!(f > 0.0) || !std::isfinite(f))
            throw ContractViolation("solve_view_weights: every partial must be positive and finite");
        f_min = std::min(f_min, f);
    }
    const double inv_exp = 1.0 / (r - 1.0);
    ViewWeights out;
    out.a.resize(partials.size());
    double total = 0.0;
    for (std::size_t m = 0; m < partials.size(); ++m) {
        out.a[m] = std::pow(f_min / partials[m], inv_exp);
        total += out.a[m];
    }
    for (double& v : out.a) v /= total;
    return out;
}

namespace detail {

struct SharedLossCache {
    std::vector<Vector> d2;      // per view, under the current metrics
    std::vector<double> loss;    // per view weighted empirical loss
    Vector dp;                   // under the current P
    std::vector<Vector> thr;     // beta_m * dp
    double reg = 0.0;            // lambda * R(P)
};

inline double combined_objective(const std::vector<double>& scale_r,
                                 const std::vector<double>& loss, double reg) {
    double total = 0.0;
    for (std::size_t m = 0; m < loss.size(); ++m) total += scale_r[m] * (loss[m] + reg);
    return total;
}

}  // namespace detail

/// Alternating minimization: per outer iteration each view metric takes one
/// accepted projected-gradient step, then the privileged metric, then the
/// view weights get their closed-form update. Stops when the relative
/// objective change drops to rel_tol or after max_iters iterations.
inline ModelMVLDML train(const MultiViewPairSet& set, const TrainConfig& config) {
    const std::size_t n_views = set.n_views();
    if (n_views == 0) throw ContractViolation("train: pair set has no views");
    if (set.priv_dim() == 0) throw ContractViolation("train: pair set has no privileged view");
    if (!(config.hp.r > 1.0)) throw ContractViolation("train: hp.r must be > 1");

    ModelMVLDML model;
    if (config.betas_override) {
        if (config.betas_override->size() != n_views)
            throw ContractViolation("train: betas_override has wrong view count");
        model.betas.betas = *config.betas_override;
    } else if (!config.use_beta) {
        model.betas.betas.assign(n_views, 1.0);
    } else {
        model.betas = compute_betas(set);
    }

    for (std::size_t m = 0; m < n_views; ++m)
        model.metrics.push_back(PsdMetric::identity(set.view_dim(m)));
    model.privileged_metric = PsdMetric::identity(set.priv_dim());
    model.view_weights.a.assign(n_views, 1.0 / static_cast<double>(n_views));

    std::vector<double> scale_r(n_views);
    for (std::size_t m = 0; m < n_views; ++m)
        scale_r[m] = std::pow(model.view_weights[m], config.hp.r);

    std::vector<StepSizeState> m_states(
        n_views, StepSizeState{config.eta0_m, 0.0, config.cap_s, true});
    StepSizeState p_state{config.eta0_p, 0.0, config.cap_s, false};

    detail::SharedLossCache cache;
    cache.dp = rowwise_metric_sq(set.priv_diffs, model.privileged_metric.matrix());
    cache.reg = config.hp.lambda * regularizer(model.privileged_metric);
    for (std::size_t m = 0; m < n_views; ++m) {
        cache.thr.push_back(model.betas.betas[m] * cache.dp);
        cache.d2.push_back(rowwise_metric_sq(set.view_diffs[m], model.metrics[m].matrix()));
        cache.loss.push_back(
            weighted_pair_loss(set.labels, set.weights, cache.thr[m], cache.d2[m]));
    }

    model.history.push_back(detail::combined_objective(scale_r, cache.loss, cache.reg));
    if (!std::isfinite(model.history.front()))
        throw NumericalError("train: initial objective is not finite");

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        // View metric blocks. Acceptance compares the view's empirical loss:
        // the remaining terms of the objective are constants here.
        for (std::size_t m = 0; m < n_views; ++m) {
            const Vector coeffs = detail::loss_grad_coeffs(set.labels, set.weights, cache.thr[m],
                                                           cache.d2[m], scale_r[m]);
            const Matrix gradient = detail::weighted_outer_sum(set.view_diffs[m], coeffs);
            Vector cand_d2;
            double cand_loss = 0.0;
            auto accept = [&](const PsdMetric& cand) {
                cand_d2 = rowwise_metric_sq(set.view_diffs[m], cand.matrix());
                cand_loss = weighted_pair_loss(set.labels, set.weights, cache.thr[m], cand_d2);
                return cand_loss < cache.loss[m];
            };
            StepResult res = step_metric(model.metrics[m], gradient, m_states[m], accept);
            m_states[m] = res.state;
            if (!res.stalled) {
                model.metrics[m] = std::move(res.metric);
                cache.d2[m] = std::move(cand_d2);
                cache.loss[m] = cand_loss;
            }
            if (config.observer)
                config.observer(UpdateEvent{iter, static_cast<int>(m), model.metrics[m],
                                            m_states[m], res.stalled});
        }

        // Privileged block. Every view's loss depends on P, so acceptance
        // compares the full objective.
        if (config.learn_p) {
            const Vector dp_grad_coeffs = [&] {
                Vector coeffs = Vector::Zero(set.labels.size());
                for (std::size_t m = 0; m < n_views; ++m)
                    coeffs += detail::loss_grad_coeffs(set.labels, set.weights, cache.thr[m],
                                                       cache.d2[m],
                                                       -scale_r[m] * model.betas.betas[m]);
                return coeffs;
            }();
            double scale_sum = 0.0;
            for (double s : scale_r) scale_sum += s;
            const Matrix gradient =
                detail::weighted_outer_sum(set.priv_diffs, dp_grad_coeffs) +
                (2.0 * config.hp.lambda / static_cast<double>(set.priv_dim()) * scale_sum) *
                    model.privileged_metric.matrix();

            const double j_current = detail::combined_objective(scale_r, cache.loss, cache.reg);
            Vector cand_dp;
            std::vector<Vector> cand_thr(n_views);
            std::vector<double> cand_loss(n_views);
            double cand_reg = 0.0;
            auto accept = [&](const PsdMetric& cand) {
                cand_dp = rowwise_metric_sq(set.priv_diffs, cand.matrix());
                cand_reg = config.hp.lambda * regularizer(cand);
                for (std::size_t m = 0; m < n_views; ++m) {
                    cand_thr[m] = model.betas.betas[m] * cand_dp;
                    cand_loss[m] =
                        weighted_pair_loss(set.labels, set.weights, cand_thr[m], cache.d2[m]);
                }
                return detail::combined_objective(scale_r, cand_loss, cand_reg) < j_current;
            };
            StepResult res = step_metric(model.privileged_metric, gradient, p_state, accept);
            p_state = res.state;
            if (!res.stalled) {
                model.privileged_metric = std::move(res.metric);
                cache.dp = std::move(cand_dp);
                cache.thr = std::move(cand_thr);
                cache.loss = std::move(cand_loss);
                cache.reg = cand_reg;
            }
            if (config.observer)
                config.observer(UpdateEvent{iter, kPrivilegedBlock, model.privileged_metric,
                                            p_state, res.stalled});
        }

        // Closed-form view weights; kept only if the evaluated objective does
        // not increase, so the recorded history is non-increasing exactly.
        std::vector<double> partials(n_views);
        for (std::size_t m = 0; m < n_views; ++m) partials[m] = cache.loss[m] + cache.reg;
        const ViewWeights cand_a = solve_view_weights(partials, config.hp.r);
        std::vector<double> cand_scale(n_views);
        for (std::size_t m = 0; m < n_views; ++m)
            cand_scale[m] = std::pow(cand_a[m], config.hp.r);
        const double j_old = detail::combined_objective(scale_r, cache.loss, cache.reg);
        const double j_new = detail::combined_objective(cand_scale, cache.loss, cache.reg);
        double j_iter = j_old;
        if (j_new <= j_old) {
            model.view_weights = cand_a;
            scale_r = cand_scale;
            j_iter = j_new;
        }

        if (!std::isfinite(j_iter)) throw NumericalError("train: objective became non-finite");
        const double j_prev = model.history.back();
        model.history.push_back(j_iter);
        if (std::abs(j_iter - j_prev) <= config.rel_tol * std::abs(j_prev)) {
            model.converged = true;
            break;
        }
    }
    return model;
}

/// Global-threshold baseline sharing the loss, pair weights, and step-size
/// machinery of train(), with sigma in place of the privileged distances.
inline ModelLDML train_baseline_ldml(const MultiViewPairSet& set, const TrainConfig& config,
                                     const SigmaPolicy& sigma_policy) {
    if (set.n_views() != 1)
        throw ContractViolation("train_baseline_ldml: expected a single-view pair set");

    ModelLDML model;
    model.sigma = sigma_policy.kind == SigmaPolicy::Kind::Fixed
                      ? sigma_policy.value
                      : mean_sq_distance(set.view_diffs[0]);
    if (sigma_policy.kind == SigmaPolicy::Kind::Fixed && !(model.sigma > 0.0))
        throw ContractViolation("train_baseline_ldml: fixed sigma must be positive");

    const Matrix& diffs = set.view_diffs[0];
    model.metric = PsdMetric::identity(set.view_dim(0));
    StepSizeState state{config.eta0_m, 0.0, config.cap_s, true};
    const Vector thresholds = Vector::Constant(set.labels.size(), model.sigma);

    Vector d2 = rowwise_metric_sq(diffs, model.metric.matrix());
    double loss = weighted_pair_loss(set.labels, set.weights, thresholds, d2);
    model.history.push_back(loss);
    if (!std::isfinite(loss)) throw NumericalError("train_baseline_ldml: initial objective not finite");

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        const Vector coeffs =
            detail::loss_grad_coeffs(set.labels, set.weights, thresholds, d2, 1.0);
        const Matrix gradient = detail::weighted_outer_sum(diffs, coeffs);
        Vector cand_d2;
        double cand_loss = 0.0;
        auto accept = [&](const PsdMetric& cand) {
            cand_d2 = rowwise_metric_sq(diffs, cand.matrix());
            cand_loss = weighted_pair_loss(set.labels, set.weights, thresholds, cand_d2);
            return cand_loss < loss;
        };
        StepResult res = step_metric(model.metric, gradient, state, accept);
        state = res.state;
        if (!res.stalled) {
            model.metric = std::move(res.metric);
            d2 = std::move(cand_d2);
            loss = cand_loss;
        }
        if (config.observer)
            config.observer(UpdateEvent{iter, 0, model.metric, state, res.stalled});

        if (!std::isfinite(loss)) throw NumericalError("train_baseline_ldml: objective became non-finite");
        const double j_prev = model.history.back();
        model.history.push_back(loss);
        if (std::abs(loss - j_prev) <= config.rel_tol * std::abs(j_prev)) {
            model.converged = true;
            break;
        }
    }
    return model;
}

}  // namespace pml
