#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pml/errors.hpp"
#include "pml/metric.hpp"

namespace pml {

/// Principal-component projection fitted on training features: centered data
/// projected on the top-k orthonormal directions covering `retained_energy`
/// of the variance.
struct PcaTransform {
    Vector mean;
    Matrix basis;  // d x k, orthonormal columns, descending explained variance
    Vector explained;  // the k retained eigenvalues of the covariance
    double retained_energy = 1.0;

    Eigen::Index input_dim() const { return mean.size(); }
    Eigen::Index output_dim() const { return basis.cols(); }
};

namespace detail {

inline void canonicalize_basis_signs(Matrix& basis) {
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
        Vector v = basis.col(c);
        canonicalize_sign(v);
        basis.col(c) = v;
    }
}

}  // namespace detail

/// Fits PCA keeping the smallest k whose cumulative eigenvalue fraction
/// reaches `energy`. Uses the Gram route when n < d, covariance otherwise.
inline PcaTransform pca_fit(const Matrix& features, double energy) {
    if (!(energy > 0.0) || energy > 1.0) throw ContractViolation("pca_fit: energy must be in (0, 1]");
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (n < 2) throw DataError("pca_fit: need at least two samples");
    if (!features.allFinite()) throw DataError("pca_fit: non-finite features");

    PcaTransform t;
    t.mean = features.colwise().mean();
    const Matrix centered = features.rowwise() - t.mean.transpose();
    const double denom = static_cast<double>(n - 1);

    Vector evals;   // descending, clamped to >= 0
    Matrix basis;   // d x n_kept candidate directions
    if (n < d) {
        // Gram route: XX^T shares the nonzero spectrum of X^T X.
        const Matrix gram = symmetrized(centered * centered.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
        if (solver.info() != Eigen::Success) throw NumericalError("pca_fit: eigendecomposition failed");
        const Eigen::Index k_all = n;
        evals.resize(k_all);
        basis.resize(d, k_all);
        for (Eigen::Index c = 0; c < k_all; ++c) {
            const Eigen::Index src = k_all - 1 - c;
            evals[c] = std::max(solver.eigenvalues()[src], 0.0) / denom;
            basis.col(c) = centered.transpose() * solver.eigenvectors().col(src);
            const double norm = basis.col(c).norm();
            if (norm > 0.0) basis.col(c) /= norm;
        }
    } else {
        const Matrix cov = symmetrized(centered.transpose() * centered) / denom;
        Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
        if (solver.info() != Eigen::Success) throw NumericalError("pca_fit: eigendecomposition failed");
        evals.resize(d);
        basis.resize(d, d);
        for (Eigen::Index c = 0; c < d; ++c) {
            const Eigen::Index src = d - 1 - c;
            evals[c] = std::max(solver.eigenvalues()[src], 0.0);
            basis.col(c) = solver.eigenvectors().col(src);
        }
    }

    const double total = evals.sum();
    if (!(total > 0.0)) throw DataError("pca_fit: degenerate data (zero variance)");

    // Numerical-rank floor, then the smallest k reaching the energy target.
    const double floor = 1e-12 * evals[0];
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < evals.size(); ++i)
        if (evals[i] > floor) ++rank;

    Eigen::Index k = rank;
    double cumulative = 0.0;
    for (Eigen::Index i = 0; i < rank; ++i) {
        cumulative += evals[i];
        if (cumulative >= energy * total - 1e-12 * total) {
            k = i + 1;
            break;
        }
    }

    t.basis = basis.leftCols(k);
    detail::canonicalize_basis_signs(t.basis);
    t.explained = evals.head(k);
    t.retained_energy = energy;
    return t;
}

/// basis^T (x - mean) for a single vector.
inline Vector pca_transform(const PcaTransform& t, const Eigen::Ref<const Vector>& x) {
    if (x.size() != t.input_dim()) throw ContractViolation("pca_transform: dimension mismatch");
    return t.basis.transpose() * (x - t.mean);
}

/// Row-wise transform of a sample matrix.
inline Matrix pca_transform_rows(const PcaTransform& t, const Matrix& x) {
    if (x.cols() != t.input_dim()) throw ContractViolation("pca_transform: dimension mismatch");
    return (x.rowwise() - t.mean.transpose()) * t.basis;
}

}  // namespace pml
