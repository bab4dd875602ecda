#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pml/errors.hpp"
#include "pml/parallel.hpp"

namespace pml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// (a + a^T)/2. Exactly symmetric elementwise because IEEE addition commutes.
inline Matrix symmetrized(const Matrix& a) {
    return 0.5 * (a + a.transpose());
}

/// A symmetric positive-semidefinite matrix together with its low-rank factor
/// U (columns = eigenvectors scaled by sqrt of the positive eigenvalues), so
/// that matrix == U U^T and squared distances in the metric equal squared
/// Euclidean distances between U^T-embedded vectors.
class PsdMetric {
public:
    static PsdMetric identity(Eigen::Index dim) {
        if (dim < 1) throw ContractViolation("PsdMetric::identity: dim must be >= 1");
        return PsdMetric(Matrix::Identity(dim, dim), Matrix::Identity(dim, dim));
    }

    static PsdMetric zero(Eigen::Index dim) {
        if (dim < 1) throw ContractViolation("PsdMetric::zero: dim must be >= 1");
        return PsdMetric(Matrix::Zero(dim, dim), Matrix(dim, 0));
    }

    /// Reconstructs the metric from a stored factor (deserialization path).
    static PsdMetric from_factor(const Matrix& factor) {
        if (factor.rows() < 1) throw ContractViolation("PsdMetric::from_factor: empty factor");
        return PsdMetric(symmetrized(factor * factor.transpose()), factor);
    }

    Eigen::Index dim() const { return matrix_.rows(); }
    Eigen::Index rank() const { return factor_.cols(); }
    const Matrix& matrix() const { return matrix_; }
    const Matrix& factor() const { return factor_; }

private:
    PsdMetric(Matrix m, Matrix f) : matrix_(std::move(m)), factor_(std::move(f)) {}
    friend PsdMetric psd_project(const Matrix& a);

    Matrix matrix_;
    Matrix factor_;
};

namespace detail {

/// Flips v so its first component of non-negligible magnitude is positive.
/// Makes eigenvector output deterministic.
inline void canonicalize_sign(Eigen::Ref<Vector> v) {
    const double floor = 1e-12 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > floor) {
            if (v[i] < 0.0) v = -v;
            return;
        }
    }
}

}  // namespace detail

/// Projection onto the PSD cone: symmetric eigendecomposition of (a + a^T)/2,
/// keeping the eigenpairs with eigenvalue above tau = 1e-12 * max(1, |lambda_max|).
/// Eigenpairs are ordered by descending eigenvalue with canonical signs.
inline PsdMetric psd_project(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw ContractViolation("psd_project: input must be square and non-empty");
    if (!a.allFinite()) throw DataError("psd_project: input has non-finite entries");

    const Matrix sym = symmetrized(a);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success)
        throw NumericalError("psd_project: eigendecomposition failed");

    const Vector& evals = solver.eigenvalues();  // ascending
    const Eigen::Index d = sym.rows();
    const double lambda_max = evals[d - 1];
    const double tau = 1e-12 * std::max(1.0, std::abs(lambda_max));

    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < d; ++i)
        if (evals[i] > tau) ++kept;

    Matrix factor(d, kept);
    for (Eigen::Index c = 0; c < kept; ++c) {
        const Eigen::Index src = d - 1 - c;  // descending eigenvalue order
        Vector v = solver.eigenvectors().col(src);
        detail::canonicalize_sign(v);
        factor.col(c) = v * std::sqrt(evals[src]);
    }

    Matrix m = kept == 0 ? Matrix::Zero(d, d).eval() : symmetrized(factor * factor.transpose());
    return PsdMetric(std::move(m), std::move(factor));
}

/// Squared Mahalanobis form diff^T M diff; negatives from round-off clamp to 0.
inline double mahalanobis_sq(const PsdMetric& metric, const Eigen::Ref<const Vector>& diff) {
    if (diff.size() != metric.dim())
        throw ContractViolation("mahalanobis_sq: vector length does not match metric dim");
    const double value = diff.dot(metric.matrix() * diff);
    return value < 0.0 ? 0.0 : value;
}

/// x projected through the factor: ||embed(x) - embed(z)||^2 == mahalanobis_sq(x - z).
inline Vector embed(const PsdMetric& metric, const Eigen::Ref<const Vector>& x) {
    if (x.size() != metric.dim())
        throw ContractViolation("embed: vector length does not match metric dim");
    return metric.factor().transpose() * x;
}

/// Row-wise squared metric distances for a stack of difference vectors.
/// Always evaluated over the fixed kReduceBlock partition so results are
/// bitwise reproducible for any thread count.
inline Vector rowwise_metric_sq(const Matrix& diffs, const Matrix& psd_matrix) {
    if (diffs.cols() != psd_matrix.rows())
        throw ContractViolation("rowwise_metric_sq: diff width does not match metric dim");
    const std::size_t n = static_cast<std::size_t>(diffs.rows());
    Vector out(diffs.rows());
    run_blocks(block_count(n), [&](std::size_t b) {
        const Eigen::Index begin = static_cast<Eigen::Index>(b * kReduceBlock);
        const Eigen::Index len =
            std::min<Eigen::Index>(static_cast<Eigen::Index>(kReduceBlock), diffs.rows() - begin);
        const auto block = diffs.middleRows(begin, len);
        out.segment(begin, len) =
            (block * psd_matrix).cwiseProduct(block).rowwise().sum().cwiseMax(0.0);
    });
    return out;
}

}  // namespace pml
