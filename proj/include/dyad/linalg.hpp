#pragma once

#include <Eigen/Dense>

namespace dyad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Truncated spectral decomposition of a PSD kernel matrix K = V diag(values) V^T.
///
/// `vectors` is n x k with orthonormal columns and `values` holds the k
/// retained eigenvalues in descending order. Directions whose eigenvalue fell
/// below the truncation threshold are not stored; they are implicitly
/// eigenvalue-zero directions of K and the shifted-inverse routines account
/// for them exactly.
struct EigenSystem {
    Matrix vectors;
    Vector values;

    [[nodiscard]] Index dim() const noexcept { return vectors.rows(); }
    [[nodiscard]] Index rank() const noexcept { return vectors.cols(); }
    [[nodiscard]] bool full_rank() const noexcept { return rank() == dim(); }

    /// Rebuilds V diag(values) V^T.
    [[nodiscard]] Matrix reconstruct() const;
};

namespace linalg {

/// Eigenvalues (or squared singular values) below this fraction of the
/// largest one are treated as zero.
inline constexpr double kRankTolerance = 1e-12;
/// Negative eigenvalues above -kNegativeTolerance * largest are clipped.
inline constexpr double kNegativeTolerance = 1e-8;
/// Symmetry tolerance for kernel matrices (max absolute deviation).
inline constexpr double kSymmetryTolerance = 1e-8;

/// Left singular vectors and squared singular values of a feature matrix,
/// i.e. the eigensystem of features * features^T without forming it.
[[nodiscard]] EigenSystem economy_svd(const Matrix& features);

/// Eigendecomposition of a symmetric positive semi-definite matrix.
[[nodiscard]] EigenSystem psd_eigen(const Matrix& kernel);

/// Extends a truncated eigensystem to a full orthonormal basis of R^n, the
/// added directions carrying eigenvalue zero.
[[nodiscard]] EigenSystem complete_basis(const EigenSystem& es);

/// Column-stacking vectorization.
[[nodiscard]] Vector vec(const Matrix& x);
[[nodiscard]] Matrix unvec(const Vector& v, Index rows, Index cols);

/// Matrix form of (A kron B) vec(X), i.e. B X A^T.
[[nodiscard]] Matrix kron_apply(const Matrix& a, const Matrix& b, const Matrix& x);

/// Dense Kronecker product A kron B.
[[nodiscard]] Matrix kron(const Matrix& a, const Matrix& b);

/// (K + lambda I)^{-1} M where K is described by `es`.
///
/// Computed as V diag(1/(values+lambda)) V^T M + (M - V V^T M)/lambda; the
/// second term is the exact contribution of the truncated null space and
/// vanishes for full-rank systems.
[[nodiscard]] Matrix shifted_inverse_apply(const EigenSystem& es, double lambda, const Matrix& m);

/// M (K + lambda I)^{-1}, without forming transposes of M.
[[nodiscard]] Matrix shifted_inverse_apply_right(const EigenSystem& es, double lambda, const Matrix& m);

/// Diagonal of (K + lambda I)^{-1}, O(k) per entry.
[[nodiscard]] Vector shifted_inverse_diagonal(const EigenSystem& es, double lambda);

/// Throws InvalidInput if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

} // namespace linalg
} // namespace dyad
