#pragma once

#include "dyad/linalg.hpp"

#include <optional>

namespace dyad {

enum class PairwiseVariant { tikhonov, two_step_ols };

/// Pairwise KRR model on a complete n x m training set. The dual vector
/// over object-task pairs is stored in matrix form (alpha = vec(dual_matrix)).
struct PairwiseModel {
    Matrix dual_matrix;
    EigenSystem object_eigen;
    EigenSystem task_eigen;
    double lambda = 0.0; // tikhonov only; 0 means ordinary least squares
    PairwiseVariant variant = PairwiseVariant::tikhonov;
    double lambda_d = 0.0; // two_step_ols only
    double lambda_t = 0.0;
};

namespace pairwise {

/// Solves (G kron K + lambda I) vec(A) = vec(Y) in the joint eigenbasis.
[[nodiscard]] PairwiseModel fit_pairwise_tikhonov(const EigenSystem& object_eigen, const EigenSystem& task_eigen,
                                                  const Matrix& labels, double lambda);

/// Least squares with the kernel (G + lambda_t I) kron (K + lambda_d I):
/// A = (K + lambda_d I)^{-1} Y (G + lambda_t I)^{-1}.
[[nodiscard]] PairwiseModel fit_pairwise_two_step_ols(const EigenSystem& object_eigen, const EigenSystem& task_eigen,
                                                      const Matrix& labels, double lambda_d, double lambda_t);

/// k^T A g. For the two-step variant, a query that coincides with training
/// object i (task j) picks up the delta-kernel term lambda_d (lambda_t) at
/// that coordinate; pass the index to include it.
[[nodiscard]] double predict_pair(const PairwiseModel& model, const Vector& object_kernel_row,
                                  const Vector& task_kernel_row, std::optional<Index> object_index = std::nullopt,
                                  std::optional<Index> task_index = std::nullopt);

/// Out-of-sample predictions for every (object query, task query) pair:
/// object_rows (q x n) * A * task_rows^T (m x p).
[[nodiscard]] Matrix predict_pairs(const PairwiseModel& model, const Matrix& object_rows, const Matrix& task_rows);

/// Exact leave-one-pair-out predictions of the Tikhonov model.
[[nodiscard]] Matrix loo_tikhonov(const EigenSystem& object_eigen, const EigenSystem& task_eigen,
                                  const Matrix& labels, double lambda);

} // namespace pairwise
} // namespace dyad
