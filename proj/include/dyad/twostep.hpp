#pragma once

#include "dyad/linalg.hpp"
#include "dyad/ridge.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dyad {

/// Training data for one target task: complete auxiliary labels over the
/// training objects plus an optional partial labeling of the target.
struct ColdStartProblem {
    EigenSystem object_eigen;       // K (n x n) or the economy SVD of object features
    EigenSystem task_eigen;         // G (m x m) or the economy SVD of task features
    Matrix labels;                  // n x m auxiliary label matrix
    Vector target_task_kernel;      // g, task kernel between the target and each auxiliary task
    std::vector<bool> labeled_mask; // n entries, true where the target label is known
    Vector labeled_values;          // target labels for the true mask entries, in object order

    [[nodiscard]] Index objects() const noexcept { return labels.rows(); }
    [[nodiscard]] Index tasks() const noexcept { return labels.cols(); }
    [[nodiscard]] bool full_cold_start() const;
    void validate() const;
};

struct TwoStepModel {
    Matrix first_step_duals;  // C, n x m
    Vector second_step_duals; // a, n
    double lambda_t = 1.0;
    double lambda_d = 1.0;
    Vector imputed_labels;    // z, n
};

enum class ErrorMetric { mse, one_minus_cindex };

[[nodiscard]] const char* to_string(ErrorMetric metric);
[[nodiscard]] ErrorMetric parse_error_metric(const std::string& name);

struct SelectionOptions {
    ErrorMetric metric = ErrorMetric::mse;
    // Score step 2 with Y - A / diag(K~) instead of R - A / diag(K~).
    bool verbatim_step2_loo = false;
    unsigned threads = 1;
};

struct SelectionReport {
    double chosen_lambda_t = 0.0;
    double chosen_lambda_d = 0.0;
    Matrix loo_matrix_step1; // R: leave-column-out predictions of Y
    Matrix loo_matrix_step2; // T: leave-row-out predictions of the model trained on R
    double error_step1 = 0.0;
    double error_step2 = 0.0;
    std::vector<double> grid_t;       // ascending
    std::vector<double> grid_d;       // ascending
    std::vector<double> errors_step1; // one per grid_t entry
    std::vector<double> errors_step2; // one per grid_d entry
    ErrorMetric metric = ErrorMetric::mse;
    bool verbatim_step2_loo = false;
    bool single_sample_axis = false; // some LOO axis had one entry
};

namespace twostep {

/// 15 log-spaced values from 1e-6 to 1e6.
[[nodiscard]] std::vector<double> default_grid();

/// C = Y (G + lambda_t I)^{-1}. Depends only on its arguments, so one C
/// serves any number of target tasks.
[[nodiscard]] Matrix fit_first_step(const EigenSystem& task_eigen, const Matrix& labels, double lambda_t);

/// z: known target labels where the mask is set, C g elsewhere.
[[nodiscard]] Vector impute_target(const Matrix& first_step_duals, const Vector& target_task_kernel,
                                   const std::vector<bool>& labeled_mask, const Vector& labeled_values);

[[nodiscard]] TwoStepModel fit_two_step(const ColdStartProblem& problem, double lambda_t, double lambda_d);

/// a = (K + lambda_d I)^{-1} Y (G + lambda_t I)^{-1} g for a target with no labels.
[[nodiscard]] Vector fit_full_cold_start_closed_form(const EigenSystem& object_eigen, const EigenSystem& task_eigen,
                                                     const Matrix& labels, const Vector& target_task_kernel,
                                                     double lambda_t, double lambda_d);

/// Selection error between LOO predictions and labels. For the C-index
/// metric, `axis` picks whether C-indices are averaged per column or per row.
[[nodiscard]] double selection_error(ErrorMetric metric, const Matrix& predictions, const Matrix& labels, Axis axis);

/// Leave-column-out search for lambda_t followed by leave-row-out search for
/// lambda_d on the step-1 LOO matrix. Ties keep the smaller value.
[[nodiscard]] SelectionReport select_lambdas(const EigenSystem& object_eigen, const EigenSystem& task_eigen,
                                             const Matrix& labels, std::span<const double> grid_t,
                                             std::span<const double> grid_d, const SelectionOptions& options = {});

[[nodiscard]] std::pair<TwoStepModel, SelectionReport> select_and_fit(const ColdStartProblem& problem,
                                                                      std::span<const double> grid,
                                                                      const SelectionOptions& options = {});
[[nodiscard]] std::pair<TwoStepModel, SelectionReport> select_and_fit(const ColdStartProblem& problem,
                                                                      std::span<const double> grid_t,
                                                                      std::span<const double> grid_d,
                                                                      const SelectionOptions& options = {});

/// object_kernel_rows (q x n) * a.
[[nodiscard]] Vector predict_target(const TwoStepModel& model, const Matrix& object_kernel_rows);

} // namespace twostep
} // namespace dyad
