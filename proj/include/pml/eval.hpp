#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "pml/dataset.hpp"
#include "pml/metric.hpp"
#include "pml/optimizer.hpp"

namespace pml {

/// CrossCamera: gallery items from the probe's own camera are ignored (the
/// plain single-shot protocol for two-camera sets). Market: only same-camera
/// same-identity items are ignored; identity -1 marks distractors that rank
/// but never match.
enum class Protocol { CrossCamera, Market };

constexpr int kDistractorId = -1;

enum class MultiQueryPooling { Min, Mean };

struct RankingReport {
    std::vector<double> cmc;  // cmc[r] = fraction of probes matched within rank r+1
    double map = 0.0;
    int n_probes = 0;    // probes entering the denominators
    int n_excluded = 0;  // probes with no valid match, skipped with a warning count
    std::string protocol;
};

/// Fused squared test distance via the quadratic form
/// sum_m a_m (x_p - x_g)^T M^m (x_p - x_g).
inline double fused_distance_sq(const std::vector<PsdMetric>& metrics,
                                const std::vector<double>& weights,
                                const std::vector<Vector>& probe,
                                const std::vector<Vector>& gallery) {
    if (metrics.size() != weights.size() || metrics.size() != probe.size() ||
        metrics.size() != gallery.size())
        throw ContractViolation("fused_distance_sq: view counts disagree");
    double total = 0.0;
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        const Vector diff = probe[m] - gallery[m];
        total += weights[m] * mahalanobis_sq(metrics[m], diff);
    }
    return total;
}

/// Fused squared distances for all probe/gallery combinations through the
/// low-rank embeddings: d^2 = sum_m a_m ||U_m^T x_p - U_m^T x_g||^2.
inline Matrix fused_distance_matrix(const std::vector<Matrix>& probe_views,
                                    const std::vector<Matrix>& gallery_views,
                                    const std::vector<PsdMetric>& metrics,
                                    const std::vector<double>& weights) {
    if (probe_views.size() != metrics.size() || gallery_views.size() != metrics.size() ||
        weights.size() != metrics.size() || metrics.empty())
        throw ContractViolation("fused_distance_matrix: view counts disagree");
    const Eigen::Index np = probe_views.front().rows();
    const Eigen::Index ng = gallery_views.front().rows();
    Matrix total = Matrix::Zero(np, ng);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        if (probe_views[m].cols() != metrics[m].dim() || gallery_views[m].cols() != metrics[m].dim())
            throw ContractViolation("fused_distance_matrix: feature dim does not match metric");
        const Matrix ep = probe_views[m] * metrics[m].factor();
        const Matrix eg = gallery_views[m] * metrics[m].factor();
        const Vector pn = ep.rowwise().squaredNorm();
        const Vector gn = eg.rowwise().squaredNorm();
        Matrix d = (-2.0 * ep * eg.transpose()).eval();
        d.colwise() += pn;
        d.rowwise() += gn.transpose();
        total += weights[m] * d.cwiseMax(0.0);
    }
    return total;
}

namespace detail {

struct ProbeOutcome {
    bool counted = false;
    int first_match_rank = 0;  // 1-based
    double ap = 0.0;
};

/// Ranks one probe row: stable sort by distance (ties keep gallery order),
/// then scan for the first correct match and the average precision.
inline ProbeOutcome rank_probe(const Matrix& dist, Eigen::Index probe_row, int probe_id,
                               int probe_cam, const std::vector<int>& gallery_ids,
                               const std::vector<int>& gallery_cams, Protocol protocol) {
    std::vector<int> order;
    order.reserve(gallery_ids.size());
    for (std::size_t g = 0; g < gallery_ids.size(); ++g) {
        const bool same_cam = gallery_cams[g] == probe_cam;
        const bool same_id = gallery_ids[g] == probe_id;
        const bool excluded =
            protocol == Protocol::CrossCamera ? same_cam : (same_cam && same_id);
        if (!excluded) order.push_back(static_cast<int>(g));
    }
    std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
        return dist(probe_row, lhs) < dist(probe_row, rhs);
    });

    int n_relevant = 0;
    for (int g : order)
        if (gallery_ids[static_cast<std::size_t>(g)] == probe_id && probe_id != kDistractorId)
            ++n_relevant;
    if (n_relevant == 0) return {};

    ProbeOutcome out;
    out.counted = true;
    int hits = 0;
    double precision_sum = 0.0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank) {
        const int g = order[rank - 1];
        if (gallery_ids[static_cast<std::size_t>(g)] == probe_id) {
            if (hits == 0) out.first_match_rank = static_cast<int>(rank);
            ++hits;
            precision_sum += static_cast<double>(hits) / static_cast<double>(rank);
        }
    }
    out.ap = precision_sum / static_cast<double>(n_relevant);
    return out;
}

inline std::vector<ProbeOutcome> rank_all(const Matrix& dist, const std::vector<int>& probe_ids,
                                          const std::vector<int>& probe_cams,
                                          const std::vector<int>& gallery_ids,
                                          const std::vector<int>& gallery_cams,
                                          Protocol protocol) {
    if (dist.rows() != static_cast<Eigen::Index>(probe_ids.size()) ||
        dist.cols() != static_cast<Eigen::Index>(gallery_ids.size()) ||
        probe_ids.size() != probe_cams.size() || gallery_ids.size() != gallery_cams.size())
        throw ContractViolation("ranking: distance matrix shape does not match id lists");
    std::vector<ProbeOutcome> outcomes(probe_ids.size());
    run_blocks(block_count(probe_ids.size()), [&](std::size_t b) {
        const std::size_t begin = b * kReduceBlock;
        const std::size_t end = std::min(begin + kReduceBlock, probe_ids.size());
        for (std::size_t p = begin; p < end; ++p)
            outcomes[p] = rank_probe(dist, static_cast<Eigen::Index>(p), probe_ids[p],
                                     probe_cams[p], gallery_ids, gallery_cams, protocol);
    });
    return outcomes;
}

}  // namespace detail

/// CMC curve and mAP in one pass over the probes.
inline RankingReport rank_evaluation(const Matrix& dist, const std::vector<int>& probe_ids,
                                     const std::vector<int>& probe_cams,
                                     const std::vector<int>& gallery_ids,
                                     const std::vector<int>& gallery_cams, Protocol protocol) {
    const auto outcomes =
        detail::rank_all(dist, probe_ids, probe_cams, gallery_ids, gallery_cams, protocol);
    RankingReport report;
    report.protocol = protocol == Protocol::CrossCamera ? "cross-camera" : "market";
    std::vector<int> counts(gallery_ids.size(), 0);
    double ap_sum = 0.0;
    for (const auto& o : outcomes) {
        if (!o.counted) {
            ++report.n_excluded;
            continue;
        }
        ++report.n_probes;
        counts[static_cast<std::size_t>(o.first_match_rank - 1)] += 1;
        ap_sum += o.ap;
    }
    if (report.n_probes == 0) throw DataError("rank_evaluation: no probe has a valid gallery match");
    report.cmc.resize(gallery_ids.size());
    int cumulative = 0;
    for (std::size_t r = 0; r < counts.size(); ++r) {
        cumulative += counts[r];
        report.cmc[r] = static_cast<double>(cumulative) / static_cast<double>(report.n_probes);
    }
    report.map = ap_sum / static_cast<double>(report.n_probes);
    return report;
}

inline std::vector<double> cmc_curve(const Matrix& dist, const std::vector<int>& probe_ids,
                                     const std::vector<int>& probe_cams,
                                     const std::vector<int>& gallery_ids,
                                     const std::vector<int>& gallery_cams, Protocol protocol) {
    return rank_evaluation(dist, probe_ids, probe_cams, gallery_ids, gallery_cams, protocol).cmc;
}

inline double mean_average_precision(const Matrix& dist, const std::vector<int>& probe_ids,
                                     const std::vector<int>& probe_cams,
                                     const std::vector<int>& gallery_ids,
                                     const std::vector<int>& gallery_cams, Protocol protocol) {
    return rank_evaluation(dist, probe_ids, probe_cams, gallery_ids, gallery_cams, protocol).map;
}

/// Pools rows of the probe-image distance matrix into one row per query
/// group. Min pooling is the default; mean pooling is available behind the
/// same interface.
inline Matrix multi_query_aggregate(const Matrix& dist, const std::vector<std::vector<int>>& groups,
                                    MultiQueryPooling pooling = MultiQueryPooling::Min) {
    Matrix out(static_cast<Eigen::Index>(groups.size()), dist.cols());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw ContractViolation("multi_query_aggregate: empty probe group");
        for (int row : groups[g])
            if (row < 0 || row >= dist.rows())
                throw ContractViolation("multi_query_aggregate: probe row out of range");
        const Eigen::Index out_row = static_cast<Eigen::Index>(g);
        if (pooling == MultiQueryPooling::Min) {
            out.row(out_row) = dist.row(groups[g].front());
            for (std::size_t k = 1; k < groups[g].size(); ++k)
                out.row(out_row) = out.row(out_row).cwiseMin(dist.row(groups[g][k]));
        } else {
            out.row(out_row).setZero();
            for (int row : groups[g]) out.row(out_row) += dist.row(row);
            out.row(out_row) /= static_cast<double>(groups[g].size());
        }
    }
    return out;
}

enum class FeatureSpace { Original, Privileged };

/// Normalized (area 1) squared-distance histograms of positive and negative
/// pairs over a shared bin range.
struct HistogramPair {
    Vector edges;        // n_bins + 1
    Vector pos_density;  // n_bins
    Vector neg_density;  // n_bins
};

inline HistogramPair distance_histograms(const MultiViewPairSet& set, FeatureSpace space,
                                         std::size_t view_index, const PsdMetric* metric,
                                         int n_bins = 50) {
    if (n_bins < 1) throw ContractViolation("distance_histograms: need at least one bin");
    const Matrix& diffs = space == FeatureSpace::Privileged ? set.priv_diffs : [&]() -> const Matrix& {
        if (view_index >= set.n_views())
            throw ContractViolation("distance_histograms: view index out of range");
        return set.view_diffs[view_index];
    }();
    if (diffs.cols() == 0) throw ContractViolation("distance_histograms: requested space is empty");

    const PsdMetric identity = PsdMetric::identity(diffs.cols());
    const PsdMetric& used = metric ? *metric : identity;
    if (used.dim() != diffs.cols())
        throw ContractViolation("distance_histograms: metric dim does not match space");
    const Vector d2 = rowwise_metric_sq(diffs, used.matrix());

    const double upper = d2.maxCoeff() > 0.0 ? d2.maxCoeff() : 1.0;
    const double width = upper / static_cast<double>(n_bins);

    HistogramPair out;
    out.edges.resize(n_bins + 1);
    for (int b = 0; b <= n_bins; ++b) out.edges[b] = width * static_cast<double>(b);
    Eigen::VectorXi pos_counts = Eigen::VectorXi::Zero(n_bins);
    Eigen::VectorXi neg_counts = Eigen::VectorXi::Zero(n_bins);
    Eigen::Index n_pos = 0, n_neg = 0;
    for (Eigen::Index i = 0; i < d2.size(); ++i) {
        int bin = static_cast<int>(d2[i] / width);
        bin = std::clamp(bin, 0, n_bins - 1);
        if (set.labels[i] > 0) {
            ++pos_counts[bin];
            ++n_pos;
        } else {
            ++neg_counts[bin];
            ++n_neg;
        }
    }
    out.pos_density.resize(n_bins);
    out.neg_density.resize(n_bins);
    for (int b = 0; b < n_bins; ++b) {
        out.pos_density[b] =
            n_pos == 0 ? 0.0 : static_cast<double>(pos_counts[b]) / (static_cast<double>(n_pos) * width);
        out.neg_density[b] =
            n_neg == 0 ? 0.0 : static_cast<double>(neg_counts[b]) / (static_cast<double>(n_neg) * width);
    }
    return out;
}

}  // namespace pml
