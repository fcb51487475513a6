#include "dyad/pairwise.hpp"

#include "dyad/error.hpp"

#include <string>

namespace dyad::pairwise {
namespace {

void check_problem(const EigenSystem& object_eigen, const EigenSystem& task_eigen, const Matrix& labels) {
    if (labels.rows() != object_eigen.dim() || labels.cols() != task_eigen.dim())
        throw InvalidInput("pairwise: label matrix is " + std::to_string(labels.rows()) + "x" +
                           std::to_string(labels.cols()) + ", kernels are " + std::to_string(object_eigen.dim()) +
                           " and " + std::to_string(task_eigen.dim()));
    if (!labels.allFinite())
        throw InvalidInput("pairwise: training set must be complete (labels contain missing or non-finite values)");
}

// 1 / (sigma_a * s_b + lambda) for every pair of retained eigenvalues.
Matrix tikhonov_scale(const Vector& object_values, const Vector& task_values, double lambda) {
    Matrix scale = object_values * task_values.transpose();
    scale.array() += lambda;
    return scale.cwiseInverse();
}

} // namespace

PairwiseModel fit_pairwise_tikhonov(const EigenSystem& object_eigen, const EigenSystem& task_eigen,
                                    const Matrix& labels, double lambda) {
    if (!(lambda > 0.0)) throw InvalidParameter("fit_pairwise_tikhonov: lambda must be positive");
    check_problem(object_eigen, task_eigen, labels);

    const Matrix& u = object_eigen.vectors;
    const Matrix& p = task_eigen.vectors;
    const Matrix projected = u.transpose() * labels * p;
    const Matrix coeffs = projected.cwiseProduct(tikhonov_scale(object_eigen.values, task_eigen.values, lambda));

    PairwiseModel model;
    model.dual_matrix = u * coeffs * p.transpose();
    // Whatever Y has outside span(U) x span(P) lies in the null space of
    // G kron K and is only shrunk by lambda.
    if (!object_eigen.full_rank() || !task_eigen.full_rank())
        model.dual_matrix += (labels - u * projected * p.transpose()) / lambda;
    model.object_eigen = object_eigen;
    model.task_eigen = task_eigen;
    model.lambda = lambda;
    model.variant = PairwiseVariant::tikhonov;
    return model;
}

PairwiseModel fit_pairwise_two_step_ols(const EigenSystem& object_eigen, const EigenSystem& task_eigen,
                                        const Matrix& labels, double lambda_d, double lambda_t) {
    if (!(lambda_d > 0.0) || !(lambda_t > 0.0))
        throw InvalidParameter("fit_pairwise_two_step_ols: lambda_d and lambda_t must be positive");
    check_problem(object_eigen, task_eigen, labels);

    const Matrix left = linalg::shifted_inverse_apply(object_eigen, lambda_d, labels);
    PairwiseModel model;
    model.dual_matrix = linalg::shifted_inverse_apply(task_eigen, lambda_t, left.transpose()).transpose();
    model.object_eigen = object_eigen;
    model.task_eigen = task_eigen;
    model.variant = PairwiseVariant::two_step_ols;
    model.lambda_d = lambda_d;
    model.lambda_t = lambda_t;
    return model;
}

double predict_pair(const PairwiseModel& model, const Vector& object_kernel_row, const Vector& task_kernel_row,
                    std::optional<Index> object_index, std::optional<Index> task_index) {
    const Index n = model.dual_matrix.rows();
    const Index m = model.dual_matrix.cols();
    if (object_kernel_row.size() != n || task_kernel_row.size() != m)
        throw InvalidInput("predict_pair: kernel rows must have lengths " + std::to_string(n) + " and " +
                           std::to_string(m));
    if ((object_index && (*object_index < 0 || *object_index >= n)) ||
        (task_index && (*task_index < 0 || *task_index >= m)))
        throw InvalidInput("predict_pair: in-sample index out of range");

    if (model.variant != PairwiseVariant::two_step_ols || (!object_index && !task_index))
        return object_kernel_row.dot(model.dual_matrix * task_kernel_row);

    Vector k = object_kernel_row;
    Vector g = task_kernel_row;
    if (object_index) k(*object_index) += model.lambda_d;
    if (task_index) g(*task_index) += model.lambda_t;
    return k.dot(model.dual_matrix * g);
}

Matrix predict_pairs(const PairwiseModel& model, const Matrix& object_rows, const Matrix& task_rows) {
    if (object_rows.cols() != model.dual_matrix.rows() || task_rows.cols() != model.dual_matrix.cols())
        throw InvalidInput("predict_pairs: kernel rows are not aligned with the training objects/tasks");
    return object_rows * model.dual_matrix * task_rows.transpose();
}

Matrix loo_tikhonov(const EigenSystem& object_eigen, const EigenSystem& task_eigen, const Matrix& labels,
                    double lambda) {
    if (!(lambda > 0.0)) throw InvalidParameter("loo_tikhonov: lambda must be positive");
    check_problem(object_eigen, task_eigen, labels);

    const EigenSystem objects = linalg::complete_basis(object_eigen);
    const EigenSystem tasks = linalg::complete_basis(task_eigen);
    const Matrix scale = tikhonov_scale(objects.values, tasks.values, lambda);
    const Matrix& u = objects.vectors;
    const Matrix& p = tasks.vectors;

    const Matrix duals = u * (u.transpose() * labels * p).cwiseProduct(scale) * p.transpose();
    // diag of (G kron K + lambda I)^{-1} at pair (i, j): sum_ab U_ia^2 s_ab P_jb^2.
    const Matrix inverse_diag = u.array().square().matrix() * scale * p.array().square().matrix().transpose();
    if (!(inverse_diag.array() > 0.0).all()) throw NumericalError("loo_tikhonov: degenerate inverse diagonal");
    if (labels.size() == 1) return Matrix::Zero(1, 1);
    return labels - duals.cwiseQuotient(inverse_diag);
}

} // namespace dyad::pairwise
