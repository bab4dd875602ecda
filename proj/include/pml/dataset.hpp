#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "pml/errors.hpp"
#include "pml/metric.hpp"
#include "pml/rng.hpp"

namespace pml {

/// One feature representation: n_samples rows of dim-length real vectors.
struct FeatureView {
    std::string name;
    Matrix features;  // n x dim

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
};

/// A labeled training pair over sample indices. label is +1 (same identity)
/// or -1; weight is 1/|S| for positives and 1/|D| for negatives.
struct LabeledPair {
    int a = 0;
    int b = 0;
    int label = 0;
    double weight = 0.0;
};

/// How negative pairs are formed. Exhaustive keeps every cross-identity pair;
/// Subsample keeps a seeded uniform draw capped at max_neg_per_pos * |S|.
struct PairPolicy {
    enum class Negatives { Exhaustive, Subsample };
    Negatives negatives = Negatives::Exhaustive;
    std::uint64_t seed = 0;
    double max_neg_per_pos = 10.0;
};

/// All same-identity cross pairs become positives; negatives per policy.
/// Deterministic for a given (labels, policy).
inline std::vector<LabeledPair> build_pairs(const std::vector<int>& identity_labels,
                                            const PairPolicy& policy) {
    const std::size_t n = identity_labels.size();
    if (n < 2) throw DataError("build_pairs: need at least two samples");

    std::vector<std::pair<int, int>> positives;
    std::vector<std::pair<int, int>> negatives;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (identity_labels[i] == identity_labels[j])
                positives.emplace_back(static_cast<int>(i), static_cast<int>(j));
            else
                negatives.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    }
    if (positives.empty()) throw DataError("build_pairs: no positive pair (every identity is a singleton)");
    if (negatives.empty()) throw DataError("build_pairs: no negative pair (single identity)");

    if (policy.negatives == PairPolicy::Negatives::Subsample) {
        const std::size_t cap = static_cast<std::size_t>(policy.max_neg_per_pos *
                                                         static_cast<double>(positives.size()));
        if (cap >= 1 && negatives.size() > cap) {
            Rng rng(derive_seed(policy.seed, 0x70617200ULL));  // "par"
            for (std::size_t k = 0; k < cap; ++k) {
                const std::size_t pick = k + rng.uniform_index(negatives.size() - k);
                std::swap(negatives[k], negatives[pick]);
            }
            negatives.resize(cap);
            std::sort(negatives.begin(), negatives.end());
        }
    }

    const double w_pos = 1.0 / static_cast<double>(positives.size());
    const double w_neg = 1.0 / static_cast<double>(negatives.size());
    std::vector<LabeledPair> pairs;
    pairs.reserve(positives.size() + negatives.size());
    for (const auto& [a, b] : positives) pairs.push_back({a, b, +1, w_pos});
    for (const auto& [a, b] : negatives) pairs.push_back({a, b, -1, w_neg});
    return pairs;
}

/// Per-view scale parameters beta^m matching the mean original squared
/// distance to the mean privileged squared distance.
struct ScaleParams {
    std::vector<double> betas;
};

/// Labeled pairs materialized as per-view difference vectors. The original
/// FeatureViews are not retained; training touches only differences.
struct MultiViewPairSet {
    std::vector<std::string> view_names;
    std::vector<Matrix> view_diffs;  // per view: n_pairs x d_m
    Matrix priv_diffs;               // n_pairs x d_star (d_star == 0 when absent)
    std::vector<LabeledPair> pairs;
    Vector labels;   // +1/-1 as doubles, aligned with pairs
    Vector weights;  // aligned with pairs
    std::size_t n_similar = 0;
    std::size_t n_dissimilar = 0;

    std::size_t n_pairs() const { return pairs.size(); }
    std::size_t n_views() const { return view_diffs.size(); }
    Eigen::Index view_dim(std::size_t m) const { return view_diffs[m].cols(); }
    Eigen::Index priv_dim() const { return priv_diffs.cols(); }
};

/// Materializes difference vectors for every pair in every view. privileged
/// may have dim 0 for global-threshold training.
inline MultiViewPairSet make_pair_set(const std::vector<FeatureView>& views,
                                      const FeatureView& privileged,
                                      const std::vector<LabeledPair>& pairs) {
    if (views.empty()) throw ContractViolation("make_pair_set: need at least one view");
    if (pairs.empty()) throw ContractViolation("make_pair_set: empty pair list");
    const Eigen::Index n = views.front().n();
    for (const auto& v : views) {
        if (v.n() != n) throw DataError("make_pair_set: views disagree on sample count");
        if (!v.features.allFinite()) throw DataError("make_pair_set: non-finite features in view " + v.name);
    }
    if (privileged.dim() > 0 && privileged.n() != n)
        throw DataError("make_pair_set: privileged view disagrees on sample count");
    if (privileged.dim() > 0 && !privileged.features.allFinite())
        throw DataError("make_pair_set: non-finite privileged features");

    MultiViewPairSet set;
    const Eigen::Index np = static_cast<Eigen::Index>(pairs.size());
    set.pairs = pairs;
    set.labels.resize(np);
    set.weights.resize(np);
    for (Eigen::Index i = 0; i < np; ++i) {
        const LabeledPair& p = pairs[static_cast<std::size_t>(i)];
        if (p.a == p.b || p.a < 0 || p.b < 0 || p.a >= n || p.b >= n)
            throw DataError("make_pair_set: pair indices out of range");
        set.labels[i] = static_cast<double>(p.label);
        set.weights[i] = p.weight;
        if (p.label == 1)
            ++set.n_similar;
        else
            ++set.n_dissimilar;
    }

    for (const auto& v : views) {
        Matrix diffs(np, v.dim());
        for (Eigen::Index i = 0; i < np; ++i) {
            const LabeledPair& p = pairs[static_cast<std::size_t>(i)];
            diffs.row(i) = v.features.row(p.a) - v.features.row(p.b);
        }
        set.view_names.push_back(v.name);
        set.view_diffs.push_back(std::move(diffs));
    }

    set.priv_diffs.resize(np, privileged.dim());
    for (Eigen::Index i = 0; i < np && privileged.dim() > 0; ++i) {
        const LabeledPair& p = pairs[static_cast<std::size_t>(i)];
        set.priv_diffs.row(i) = privileged.features.row(p.a) - privileged.features.row(p.b);
    }
    return set;
}

/// Mean squared Euclidean distance over the training pairs of one diff stack.
inline double mean_sq_distance(const Matrix& diffs) {
    const std::size_t n = static_cast<std::size_t>(diffs.rows());
    const double total = block_reduce<double>(
        n, 0.0,
        [&](std::size_t begin, std::size_t end) {
            return diffs.middleRows(static_cast<Eigen::Index>(begin),
                                    static_cast<Eigen::Index>(end - begin))
                .rowwise()
                .squaredNorm()
                .sum();
        },
        [](double x, double y) { return x + y; });
    return total / static_cast<double>(n);
}

/// beta^m = mean squared Euclidean pair distance in view m divided by the
/// same mean in the privileged view.
inline ScaleParams compute_betas(const MultiViewPairSet& set) {
    if (set.priv_dim() == 0) throw DataError("compute_betas: pair set has no privileged view");
    const double priv_mean = mean_sq_distance(set.priv_diffs);
    if (!(priv_mean > 0.0))
        throw DataError("compute_betas: privileged features are degenerate (zero mean pair distance)");
    ScaleParams out;
    for (const auto& diffs : set.view_diffs) out.betas.push_back(mean_sq_distance(diffs) / priv_mean);
    return out;
}

/// Alternative index set for beta: mean over all C(n,2) sample pairs,
/// via sum_{i<j} ||x_i - x_j||^2 = n * sum ||x_i||^2 - ||sum x_i||^2.
inline double mean_sq_distance_all_pairs(const Matrix& features) {
    const double n = static_cast<double>(features.rows());
    if (features.rows() < 2) throw DataError("mean_sq_distance_all_pairs: need >= 2 samples");
    const double sq_sum = features.rowwise().squaredNorm().sum();
    const double col_norm = features.colwise().sum().squaredNorm();
    return (n * sq_sum - col_norm) / (n * (n - 1.0) / 2.0);
}

inline ScaleParams compute_betas_all_pairs(const std::vector<FeatureView>& views,
                                           const FeatureView& privileged) {
    const double priv_mean = mean_sq_distance_all_pairs(privileged.features);
    if (!(priv_mean > 0.0))
        throw DataError("compute_betas_all_pairs: privileged features are degenerate");
    ScaleParams out;
    for (const auto& v : views)
        out.betas.push_back(mean_sq_distance_all_pairs(v.features) / priv_mean);
    return out;
}

}  // namespace pml
