#include "dyad/twostep.hpp"

#include "dyad/error.hpp"
#include "dyad/eval.hpp"
#include "dyad/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dyad {

const char* to_string(ErrorMetric metric) {
    switch (metric) {
    case ErrorMetric::mse: return "mse";
    case ErrorMetric::one_minus_cindex: return "one_minus_cindex";
    }
    return "unknown";
}

ErrorMetric parse_error_metric(const std::string& name) {
    if (name == "mse") return ErrorMetric::mse;
    if (name == "one_minus_cindex" || name == "cindex") return ErrorMetric::one_minus_cindex;
    throw InvalidParameter("unknown error metric '" + name + "'");
}

bool ColdStartProblem::full_cold_start() const {
    return std::none_of(labeled_mask.begin(), labeled_mask.end(), [](bool b) { return b; });
}

void ColdStartProblem::validate() const {
    const Index n = labels.rows();
    const Index m = labels.cols();
    if (n < 1 || m < 1) throw InvalidInput("cold start problem: empty label matrix");
    if (!labels.allFinite())
        throw InvalidInput("cold start problem: auxiliary labels are incomplete or non-finite; "
                           "complete them first (e.g. with mean imputation)");
    if (object_eigen.dim() != n) throw InvalidInput("cold start problem: object kernel does not match label rows");
    if (task_eigen.dim() != m) throw InvalidInput("cold start problem: task kernel does not match label columns");
    if (target_task_kernel.size() != m)
        throw InvalidInput("cold start problem: target task kernel must have one entry per auxiliary task");
    if (!target_task_kernel.allFinite()) throw InvalidInput("cold start problem: target task kernel is non-finite");
    if (static_cast<Index>(labeled_mask.size()) != n)
        throw InvalidInput("cold start problem: labeled mask must have one entry per object");
    const auto labeled = std::count(labeled_mask.begin(), labeled_mask.end(), true);
    if (labeled != labeled_values.size())
        throw InvalidInput("cold start problem: " + std::to_string(labeled_values.size()) + " target labels for " +
                           std::to_string(labeled) + " labeled objects");
    if (!labeled_values.allFinite()) throw InvalidInput("cold start problem: target labels are non-finite");
}

namespace twostep {
namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0)) throw InvalidParameter(std::string(name) + " must be positive");
}

std::vector<double> ascending_grid(std::span<const double> grid, const char* name) {
    if (grid.empty()) throw InvalidParameter(std::string(name) + ": grid is empty");
    std::vector<double> out(grid.begin(), grid.end());
    for (double v : out) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidParameter(std::string(name) + ": grid values must be positive and finite");
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Strict improvement, first index wins among ties.
std::size_t argmin_strict(const std::vector<double>& errors) {
    std::size_t best = 0;
    double best_error = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i] < best_error) {
            best_error = errors[i];
            best = i;
        }
    }
    return best;
}

struct LooStep {
    Matrix predictions;
    bool single_sample_axis = false;
};

LooStep leave_column_out(const EigenSystem& task_eigen, const Matrix& labels, double lambda_t) {
    const Matrix duals = fit_first_step(task_eigen, labels, lambda_t);
    auto loo = ridge::loo_predictions(duals, labels, ridge::loo_diagonal(task_eigen, lambda_t), Axis::columns);
    return {std::move(loo.predictions), loo.single_sample_axis};
}

LooStep leave_row_out(const EigenSystem& object_eigen, const Matrix& step1_loo, const Matrix& labels,
                      double lambda_d, bool verbatim) {
    const Matrix duals = linalg::shifted_inverse_apply(object_eigen, lambda_d, step1_loo);
    const Vector diag = ridge::loo_diagonal(object_eigen, lambda_d);
    auto loo = ridge::loo_predictions(duals, verbatim ? labels : step1_loo, diag, Axis::rows);
    return {std::move(loo.predictions), loo.single_sample_axis};
}

double finite_error(double e) {
    if (!std::isfinite(e)) throw NumericalError("model selection: error metric returned a non-finite value");
    return e;
}

double checked_error(ErrorMetric metric, const Matrix& predictions, const Matrix& labels, Axis axis) {
    return finite_error(selection_error(metric, predictions, labels, axis));
}

Vector checked_reciprocal(const Vector& inv_diagonal) {
    if (!(inv_diagonal.array() > 0.0).all())
        throw NumericalError("loo_predictions: inverse diagonal has a non-positive entry");
    return inv_diagonal.cwiseInverse();
}

// Grid-search errors. The MSE paths score the LOO residuals straight from the
// duals instead of materializing the prediction matrices.
double column_error(const EigenSystem& task_eigen, const Matrix& labels, double lambda_t, ErrorMetric metric) {
    if (metric != ErrorMetric::mse || labels.cols() < 2)
        return checked_error(metric, leave_column_out(task_eigen, labels, lambda_t).predictions, labels, Axis::columns);
    const Matrix duals = fit_first_step(task_eigen, labels, lambda_t);
    const Vector recip = checked_reciprocal(ridge::loo_diagonal(task_eigen, lambda_t));
    // Y - R = C diag(1/d).
    return finite_error((duals * recip.asDiagonal()).squaredNorm() / static_cast<double>(labels.size()));
}

double row_error(const EigenSystem& object_eigen, const Matrix& step1_loo, const Matrix& labels, double lambda_d,
                 ErrorMetric metric, bool verbatim) {
    if (metric != ErrorMetric::mse || labels.rows() < 2)
        return checked_error(metric, leave_row_out(object_eigen, step1_loo, labels, lambda_d, verbatim).predictions,
                             labels, Axis::rows);
    const Matrix duals = linalg::shifted_inverse_apply(object_eigen, lambda_d, step1_loo);
    const Vector recip = checked_reciprocal(ridge::loo_diagonal(object_eigen, lambda_d));
    const double n = static_cast<double>(labels.size());
    if (verbatim) return finite_error((recip.asDiagonal() * duals).squaredNorm() / n);
    return finite_error(((step1_loo - labels) - recip.asDiagonal() * duals).squaredNorm() / n);
}

} // namespace

std::vector<double> default_grid() {
    std::vector<double> grid;
    grid.reserve(15);
    for (int i = 0; i < 15; ++i) grid.push_back(std::pow(10.0, -6.0 + 12.0 * i / 14.0));
    return grid;
}

Matrix fit_first_step(const EigenSystem& task_eigen, const Matrix& labels, double lambda_t) {
    require_positive(lambda_t, "lambda_t");
    return ridge::fit_multilabel(task_eigen, labels, lambda_t, Axis::columns).duals;
}

Vector impute_target(const Matrix& first_step_duals, const Vector& target_task_kernel,
                     const std::vector<bool>& labeled_mask, const Vector& labeled_values) {
    const Index n = first_step_duals.rows();
    if (static_cast<Index>(labeled_mask.size()) != n) throw InvalidInput("impute_target: mask length mismatch");
    Vector z(n);
    const bool any_unlabeled = std::any_of(labeled_mask.begin(), labeled_mask.end(), [](bool b) { return !b; });
    const Vector predicted = any_unlabeled ? Vector(first_step_duals * target_task_kernel) : Vector::Zero(n);
    Index next_label = 0;
    for (Index i = 0; i < n; ++i) {
        if (labeled_mask[static_cast<std::size_t>(i)]) {
            if (next_label >= labeled_values.size()) throw InvalidInput("impute_target: too few labeled values");
            z(i) = labeled_values(next_label++);
        } else {
            z(i) = predicted(i);
        }
    }
    if (next_label != labeled_values.size()) throw InvalidInput("impute_target: too many labeled values");
    return z;
}

TwoStepModel fit_two_step(const ColdStartProblem& problem, double lambda_t, double lambda_d) {
    require_positive(lambda_t, "lambda_t");
    require_positive(lambda_d, "lambda_d");
    problem.validate();

    TwoStepModel model;
    model.lambda_t = lambda_t;
    model.lambda_d = lambda_d;
    model.first_step_duals = fit_first_step(problem.task_eigen, problem.labels, lambda_t);
    model.imputed_labels = impute_target(model.first_step_duals, problem.target_task_kernel, problem.labeled_mask,
                                         problem.labeled_values);
    model.second_step_duals = linalg::shifted_inverse_apply(problem.object_eigen, lambda_d, model.imputed_labels);
    return model;
}

Vector fit_full_cold_start_closed_form(const EigenSystem& object_eigen, const EigenSystem& task_eigen,
                                       const Matrix& labels, const Vector& target_task_kernel, double lambda_t,
                                       double lambda_d) {
    require_positive(lambda_t, "lambda_t");
    require_positive(lambda_d, "lambda_d");
    if (labels.rows() != object_eigen.dim() || labels.cols() != task_eigen.dim() ||
        target_task_kernel.size() != task_eigen.dim())
        throw InvalidInput("fit_full_cold_start_closed_form: dimension mismatch");
    const Vector task_weights = linalg::shifted_inverse_apply(task_eigen, lambda_t, target_task_kernel);
    return linalg::shifted_inverse_apply(object_eigen, lambda_d, labels * task_weights);
}

double selection_error(ErrorMetric metric, const Matrix& predictions, const Matrix& labels, Axis axis) {
    if (predictions.rows() != labels.rows() || predictions.cols() != labels.cols())
        throw InvalidInput("selection_error: shape mismatch");
    if (metric == ErrorMetric::mse) return (predictions - labels).squaredNorm() / static_cast<double>(labels.size());

    double total = 0.0;
    std::size_t defined = 0;
    const Index count = axis == Axis::columns ? labels.cols() : labels.rows();
    for (Index i = 0; i < count; ++i) {
        const Vector y = axis == Axis::columns ? Vector(labels.col(i)) : Vector(labels.row(i).transpose());
        const Vector p = axis == Axis::columns ? Vector(predictions.col(i)) : Vector(predictions.row(i).transpose());
        if (y.size() < 2 || (y.array() == y(0)).all()) continue;
        total += eval::c_index(y, p);
        ++defined;
    }
    if (defined == 0) throw UndefinedMetric("selection_error: no column/row has two distinct labels");
    return 1.0 - total / static_cast<double>(defined);
}

SelectionReport select_lambdas(const EigenSystem& object_eigen, const EigenSystem& task_eigen, const Matrix& labels,
                               std::span<const double> grid_t, std::span<const double> grid_d,
                               const SelectionOptions& options) {
    if (labels.rows() != object_eigen.dim() || labels.cols() != task_eigen.dim())
        throw InvalidInput("select_lambdas: label matrix does not match the eigensystems");
    if (!labels.allFinite()) throw InvalidInput("select_lambdas: auxiliary labels are incomplete or non-finite");

    SelectionReport report;
    report.metric = options.metric;
    report.verbatim_step2_loo = options.verbatim_step2_loo;
    report.grid_t = ascending_grid(grid_t, "lambda_t grid");
    report.grid_d = ascending_grid(grid_d, "lambda_d grid");

    // Step 1: leave-column-out over the task grid.
    report.errors_step1.assign(report.grid_t.size(), 0.0);
    parallel_for(report.grid_t.size(), options.threads, [&](std::size_t i) {
        report.errors_step1[i] = column_error(task_eigen, labels, report.grid_t[i], options.metric);
    });
    const std::size_t best_t = argmin_strict(report.errors_step1);
    report.chosen_lambda_t = report.grid_t[best_t];
    report.error_step1 = report.errors_step1[best_t];
    LooStep step1 = leave_column_out(task_eigen, labels, report.chosen_lambda_t);
    report.loo_matrix_step1 = std::move(step1.predictions);

    // Step 2: leave-row-out of a model trained on R, scored against Y.
    report.errors_step2.assign(report.grid_d.size(), 0.0);
    parallel_for(report.grid_d.size(), options.threads, [&](std::size_t i) {
        report.errors_step2[i] = row_error(object_eigen, report.loo_matrix_step1, labels, report.grid_d[i],
                                           options.metric, options.verbatim_step2_loo);
    });
    const std::size_t best_d = argmin_strict(report.errors_step2);
    report.chosen_lambda_d = report.grid_d[best_d];
    report.error_step2 = report.errors_step2[best_d];
    LooStep step2 = leave_row_out(object_eigen, report.loo_matrix_step1, labels, report.chosen_lambda_d,
                                  options.verbatim_step2_loo);
    report.loo_matrix_step2 = std::move(step2.predictions);
    report.single_sample_axis = step1.single_sample_axis || step2.single_sample_axis;
    return report;
}

std::pair<TwoStepModel, SelectionReport> select_and_fit(const ColdStartProblem& problem, std::span<const double> grid,
                                                        const SelectionOptions& options) {
    return select_and_fit(problem, grid, grid, options);
}

std::pair<TwoStepModel, SelectionReport> select_and_fit(const ColdStartProblem& problem,
                                                        std::span<const double> grid_t,
                                                        std::span<const double> grid_d,
                                                        const SelectionOptions& options) {
    problem.validate();
    SelectionReport report =
        select_lambdas(problem.object_eigen, problem.task_eigen, problem.labels, grid_t, grid_d, options);
    TwoStepModel model = fit_two_step(problem, report.chosen_lambda_t, report.chosen_lambda_d);
    return {std::move(model), std::move(report)};
}

Vector predict_target(const TwoStepModel& model, const Matrix& object_kernel_rows) {
    if (object_kernel_rows.cols() != model.second_step_duals.size())
        throw InvalidInput("predict_target: kernel rows have " + std::to_string(object_kernel_rows.cols()) +
                           " columns, model was trained on " + std::to_string(model.second_step_duals.size()));
    return object_kernel_rows * model.second_step_duals;
}

} // namespace twostep
} // namespace dyad
