#pragma once

// Test-side reference implementations, written as straight-line loops and
// kept independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double quad_form(const VectorXd& v, const MatrixXd& m) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        for (Eigen::Index j = 0; j < v.size(); ++j) total += v[i] * m(i, j) * v[j];
    return total;
}

inline double frob_sq(const MatrixXd& m) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) total += m(i, j) * m(i, j);
    return total;
}

/// Term-by-term evaluation of the multi-view objective
/// J = sum_m a_m^r { sum_i w_i ln(1 + exp(-y_i (beta_m dP_i - dM_i))) + lambda |P|_F^2 / d* }.
inline double objective(const std::vector<MatrixXd>& view_diffs, const MatrixXd& priv_diffs,
                        const std::vector<int>& labels, const std::vector<double>& weights,
                        const std::vector<MatrixXd>& metrics, const MatrixXd& p,
                        const std::vector<double>& a, const std::vector<double>& betas,
                        double lambda, double r) {
    double j = 0.0;
    for (std::size_t m = 0; m < view_diffs.size(); ++m) {
        double f_m = 0.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(i);
            const double dm = quad_form(view_diffs[m].row(row).transpose(), metrics[m]);
            const double dp = quad_form(priv_diffs.row(row).transpose(), p);
            const double u = labels[i] * (betas[m] * dp - dm);
            f_m += weights[i] * std::log(1.0 + std::exp(-u));
        }
        f_m += lambda * frob_sq(p) / static_cast<double>(p.rows());
        j += std::pow(a[m], r) * f_m;
    }
    return j;
}

/// Central finite differences of `objective` with respect to each entry of
/// the view metric `which`.
inline MatrixXd fd_grad_metric(std::vector<MatrixXd> metrics, std::size_t which,
                               const std::vector<MatrixXd>& view_diffs, const MatrixXd& priv_diffs,
                               const std::vector<int>& labels, const std::vector<double>& weights,
                               const MatrixXd& p, const std::vector<double>& a,
                               const std::vector<double>& betas, double lambda, double r) {
    const Eigen::Index d = metrics[which].rows();
    MatrixXd grad(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double h = 1e-5 * (1.0 + std::abs(metrics[which](i, j)));
            const double saved = metrics[which](i, j);
            metrics[which](i, j) = saved + h;
            const double up = objective(view_diffs, priv_diffs, labels, weights, metrics, p, a,
                                        betas, lambda, r);
            metrics[which](i, j) = saved - h;
            const double down = objective(view_diffs, priv_diffs, labels, weights, metrics, p, a,
                                          betas, lambda, r);
            metrics[which](i, j) = saved;
            grad(i, j) = (up - down) / (2.0 * h);
        }
    }
    return grad;
}

/// Central finite differences with respect to each entry of P.
inline MatrixXd fd_grad_priv(const std::vector<MatrixXd>& metrics, MatrixXd p,
                             const std::vector<MatrixXd>& view_diffs, const MatrixXd& priv_diffs,
                             const std::vector<int>& labels, const std::vector<double>& weights,
                             const std::vector<double>& a, const std::vector<double>& betas,
                             double lambda, double r) {
    const Eigen::Index d = p.rows();
    MatrixXd grad(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double h = 1e-5 * (1.0 + std::abs(p(i, j)));
            const double saved = p(i, j);
            p(i, j) = saved + h;
            const double up = objective(view_diffs, priv_diffs, labels, weights, metrics, p, a,
                                        betas, lambda, r);
            p(i, j) = saved - h;
            const double down = objective(view_diffs, priv_diffs, labels, weights, metrics, p, a,
                                          betas, lambda, r);
            p(i, j) = saved;
            grad(i, j) = (up - down) / (2.0 * h);
        }
    }
    return grad;
}

struct RankedProbe {
    bool has_match = false;
    int first_rank = 0;
    double ap = 0.0;
};

/// Sort-and-scan ranking for one probe. `excluded` marks gallery entries that
/// must not appear in the ranked list at all.
inline RankedProbe rank_probe(const std::vector<double>& dist, const std::vector<bool>& excluded,
                              const std::vector<bool>& relevant) {
    std::vector<int> order;
    for (std::size_t g = 0; g < dist.size(); ++g)
        if (!excluded[g]) order.push_back(static_cast<int>(g));
    std::stable_sort(order.begin(), order.end(),
                     [&](int l, int r) { return dist[static_cast<std::size_t>(l)] < dist[static_cast<std::size_t>(r)]; });
    int total_relevant = 0;
    for (int g : order)
        if (relevant[static_cast<std::size_t>(g)]) ++total_relevant;
    if (total_relevant == 0) return {};
    RankedProbe out;
    out.has_match = true;
    int hits = 0;
    double precision_sum = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (relevant[static_cast<std::size_t>(order[pos])]) {
            ++hits;
            if (hits == 1) out.first_rank = static_cast<int>(pos + 1);
            precision_sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
        }
    }
    out.ap = precision_sum / static_cast<double>(total_relevant);
    return out;
}

}  // namespace oracle
