#pragma once

#include "dyad/linalg.hpp"

#include <span>
#include <string>
#include <vector>

namespace dyad {

/// Which axis of a label matrix the kernel indexes. `rows` is the object
/// axis (duals = (K + lambda I)^{-1} Y, leave-row-out), `columns` the task
/// axis (duals = Y (G + lambda I)^{-1}, leave-column-out).
enum class Axis { rows, columns };

/// Closed-form multi-label kernel ridge regression model.
struct RidgeModel {
    Matrix duals;
    double lambda = 1.0;
    Axis axis = Axis::rows;
    EigenSystem basis;
    std::vector<std::string> training_ids;
};

struct LooResult {
    Matrix predictions;
    // The held-out axis had a single entry; predictions were set to zero.
    bool single_sample_axis = false;
};

namespace ridge {

[[nodiscard]] RidgeModel fit_multilabel(const EigenSystem& es, const Matrix& labels, double lambda,
                                        Axis axis = Axis::rows, std::vector<std::string> training_ids = {});

/// Diagonal of (K + lambda I)^{-1}.
[[nodiscard]] Vector loo_diagonal(const EigenSystem& es, double lambda);

/// Exact leave-one-out predictions from stored duals: entry (i,j) minus the
/// dual divided by the matching inverse-diagonal entry.
[[nodiscard]] LooResult loo_predictions(const Matrix& duals, const Matrix& labels, const Vector& inv_diagonal,
                                        Axis axis);

/// Row-axis models: kernel_rows (q x n) * duals. Column-axis models:
/// duals * kernel_rows^T, one output column per query task. When
/// `column_ids` is non-empty it must equal the model's training ids.
[[nodiscard]] Matrix predict(const RidgeModel& model, const Matrix& kernel_rows,
                             std::span<const std::string> column_ids = {});

} // namespace ridge
} // namespace dyad
