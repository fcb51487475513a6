#include "dyad/spectral.hpp"

#include "dyad/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dyad {

void FilterSpec::validate() const {
    switch (kind) {
    case FilterKind::ols: return;
    case FilterKind::tikhonov:
        if (!(lambda > 0.0)) throw InvalidParameter("tikhonov filter requires lambda > 0");
        return;
    case FilterKind::two_step:
        if (!(lambda_t > 0.0) || !(lambda_d > 0.0))
            throw InvalidParameter("two-step filter requires lambda_t > 0 and lambda_d > 0");
        return;
    }
}

double FilterSpec::effective_lambda() const {
    switch (kind) {
    case FilterKind::ols: return 0.0;
    case FilterKind::tikhonov: return lambda;
    case FilterKind::two_step: return lambda_t * lambda_d;
    }
    return 0.0;
}

namespace spectral {
namespace {

double inverse_or_throw(double sigma) {
    if (!(sigma > 0.0)) throw NumericalError("ols filter is singular at sigma = 0");
    return 1.0 / sigma;
}

} // namespace

double filter_value(const FilterSpec& spec, double sigma) {
    spec.validate();
    if (sigma < 0.0) throw InvalidParameter("filter_value: sigma must be nonnegative");
    switch (spec.kind) {
    case FilterKind::ols: return inverse_or_throw(sigma);
    case FilterKind::tikhonov: return 1.0 / (sigma + spec.lambda);
    case FilterKind::two_step:
        throw InvalidParameter("filter_value: the two-step filter needs the (task, object) eigenvalue pair");
    }
    return 0.0;
}

double filter_value(const FilterSpec& spec, double task_sigma, double object_sigma) {
    spec.validate();
    if (task_sigma < 0.0 || object_sigma < 0.0) throw InvalidParameter("filter_value: sigma must be nonnegative");
    switch (spec.kind) {
    case FilterKind::ols: return inverse_or_throw(task_sigma * object_sigma);
    case FilterKind::tikhonov: return 1.0 / (task_sigma * object_sigma + spec.lambda);
    case FilterKind::two_step: return 1.0 / ((task_sigma + spec.lambda_t) * (object_sigma + spec.lambda_d));
    }
    return 0.0;
}

PairwiseModel fit_by_filter(const EigenSystem& object_eigen, const EigenSystem& task_eigen, const Matrix& labels,
                            const FilterSpec& spec) {
    spec.validate();
    if (labels.rows() != object_eigen.dim() || labels.cols() != task_eigen.dim())
        throw InvalidInput("fit_by_filter: label matrix does not match the eigensystems");
    if (!labels.allFinite()) throw InvalidInput("fit_by_filter: labels must be complete and finite");

    const EigenSystem objects = linalg::complete_basis(object_eigen);
    const EigenSystem tasks = linalg::complete_basis(task_eigen);
    Matrix filter(objects.dim(), tasks.dim());
    for (Index a = 0; a < objects.dim(); ++a)
        for (Index b = 0; b < tasks.dim(); ++b) filter(a, b) = filter_value(spec, tasks.values(b), objects.values(a));

    const Matrix coeffs = (objects.vectors.transpose() * labels * tasks.vectors).cwiseProduct(filter);

    PairwiseModel model;
    model.dual_matrix = objects.vectors * coeffs * tasks.vectors.transpose();
    model.object_eigen = object_eigen;
    model.task_eigen = task_eigen;
    if (spec.kind == FilterKind::two_step) {
        model.variant = PairwiseVariant::two_step_ols;
        model.lambda_t = spec.lambda_t;
        model.lambda_d = spec.lambda_d;
    } else {
        model.variant = PairwiseVariant::tikhonov;
        model.lambda = spec.effective_lambda();
    }
    return model;
}

AdmissibilityConstants verify_admissibility(const FilterSpec& spec, std::span<const double> sigma_grid,
                                            double kappa_sq, double nu) {
    spec.validate();
    if (spec.kind == FilterKind::ols)
        throw InvalidParameter("verify_admissibility: ols has no regularization parameter");
    if (sigma_grid.empty()) throw InvalidParameter("verify_admissibility: empty sigma grid");
    if (!(kappa_sq > 0.0)) throw InvalidParameter("verify_admissibility: kappa_sq must be positive");
    if (!(nu > 0.0)) throw InvalidParameter("verify_admissibility: nu must be positive");
    for (double s : sigma_grid) {
        if (!(s > 0.0) || s > kappa_sq) throw InvalidParameter("verify_admissibility: grid must lie in (0, kappa^2]");
    }

    const double lambda = spec.effective_lambda();
    const double lambda_nu = std::pow(lambda, nu);
    AdmissibilityConstants out;
    out.nu_bar = nu;
    auto accumulate = [&](double sigma, double f) {
        const double residual = std::abs(1.0 - sigma * f);
        out.D = std::max(out.D, std::abs(sigma * f));
        out.B_times_lambda = std::max(out.B_times_lambda, std::abs(f) * lambda);
        out.gamma = std::max(out.gamma, residual);
        out.gamma_nu = std::max(out.gamma_nu, residual * std::pow(sigma, nu) / lambda_nu);
    };

    if (spec.kind == FilterKind::two_step) {
        for (double task_sigma : sigma_grid) {
            for (double object_sigma : sigma_grid) {
                const double sigma = task_sigma * object_sigma;
                if (sigma > kappa_sq) continue;
                accumulate(sigma, filter_value(spec, task_sigma, object_sigma));
            }
        }
    } else {
        for (double sigma : sigma_grid) accumulate(sigma, filter_value(spec, sigma));
    }
    return out;
}

double kappa_sq(const EigenSystem& object_eigen, const EigenSystem& task_eigen) {
    const double a = object_eigen.values.size() > 0 ? object_eigen.values.maxCoeff() : 0.0;
    const double b = task_eigen.values.size() > 0 ? task_eigen.values.maxCoeff() : 0.0;
    return a * b;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw InvalidParameter("log_grid: need 0 < lo <= hi and count >= 1");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = hi;
        return out;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

} // namespace spectral
} // namespace dyad
