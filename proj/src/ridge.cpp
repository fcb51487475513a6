#include "dyad/ridge.hpp"

#include "dyad/error.hpp"

#include <algorithm>
#include <string>

namespace dyad::ridge {

RidgeModel fit_multilabel(const EigenSystem& es, const Matrix& labels, double lambda, Axis axis,
                          std::vector<std::string> training_ids) {
    if (!(lambda > 0.0)) throw InvalidParameter("fit_multilabel: lambda must be positive");
    linalg::require_finite(labels, "fit_multilabel");
    const Index along = axis == Axis::rows ? labels.rows() : labels.cols();
    if (along != es.dim())
        throw InvalidInput("fit_multilabel: label matrix has " + std::to_string(along) +
                           " entries along the kernel axis, eigensystem has " + std::to_string(es.dim()));
    if (!training_ids.empty() && static_cast<Index>(training_ids.size()) != es.dim())
        throw InvalidInput("fit_multilabel: training id count does not match the kernel");

    RidgeModel model;
    model.lambda = lambda;
    model.axis = axis;
    model.basis = es;
    model.training_ids = std::move(training_ids);
    if (axis == Axis::rows) {
        model.duals = linalg::shifted_inverse_apply(es, lambda, labels);
    } else {
        model.duals = linalg::shifted_inverse_apply_right(es, lambda, labels);
    }
    return model;
}

Vector loo_diagonal(const EigenSystem& es, double lambda) {
    if (!(lambda > 0.0)) throw InvalidParameter("loo_diagonal: lambda must be positive");
    return linalg::shifted_inverse_diagonal(es, lambda);
}

LooResult loo_predictions(const Matrix& duals, const Matrix& labels, const Vector& inv_diagonal, Axis axis) {
    if (duals.rows() != labels.rows() || duals.cols() != labels.cols())
        throw InvalidInput("loo_predictions: duals and labels differ in shape");
    const Index along = axis == Axis::rows ? labels.rows() : labels.cols();
    if (inv_diagonal.size() != along) throw InvalidInput("loo_predictions: inverse diagonal has the wrong length");

    LooResult out;
    if (along == 1) {
        out.predictions = Matrix::Zero(labels.rows(), labels.cols());
        out.single_sample_axis = true;
        return out;
    }
    if (!(inv_diagonal.array() > 0.0).all())
        throw NumericalError("loo_predictions: inverse diagonal has a non-positive entry");

    const Vector reciprocal = inv_diagonal.cwiseInverse();
    if (axis == Axis::rows)
        out.predictions = labels - reciprocal.asDiagonal() * duals;
    else
        out.predictions = labels - duals * reciprocal.asDiagonal();
    return out;
}

Matrix predict(const RidgeModel& model, const Matrix& kernel_rows, std::span<const std::string> column_ids) {
    const Index n = model.axis == Axis::rows ? model.duals.rows() : model.duals.cols();
    if (kernel_rows.cols() != n)
        throw InvalidInput("predict: kernel rows have " + std::to_string(kernel_rows.cols()) +
                           " columns, model was trained on " + std::to_string(n));
    if (!column_ids.empty()) {
        if (column_ids.size() != model.training_ids.size() ||
            !std::equal(column_ids.begin(), column_ids.end(), model.training_ids.begin()))
            throw InvalidInput("predict: kernel row ids are not aligned with the training ids");
    }
    if (model.axis == Axis::rows) return kernel_rows * model.duals;
    return model.duals * kernel_rows.transpose();
}

} // namespace dyad::ridge
