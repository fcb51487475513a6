#pragma once

#include "dyad/linalg.hpp"
#include "dyad/pairwise.hpp"

#include <span>
#include <vector>

namespace dyad {

enum class FilterKind { ols, tikhonov, two_step };

/// A spectral filter f applied to the eigenvalues of the pairwise kernel.
struct FilterSpec {
    FilterKind kind = FilterKind::tikhonov;
    double lambda = 1.0;   // tikhonov
    double lambda_t = 1.0; // two_step, paired with the task eigenvalue
    double lambda_d = 1.0; // two_step, paired with the object eigenvalue

    static FilterSpec ols() { return {FilterKind::ols, 0.0, 0.0, 0.0}; }
    static FilterSpec tikhonov(double lambda) { return {FilterKind::tikhonov, lambda, 0.0, 0.0}; }
    static FilterSpec two_step(double lambda_t, double lambda_d) {
        return {FilterKind::two_step, 0.0, lambda_t, lambda_d};
    }

    void validate() const;
    /// lambda for tikhonov, lambda_t * lambda_d for two_step, 0 for ols.
    [[nodiscard]] double effective_lambda() const;
};

/// Measured suprema of the admissibility conditions over a sigma grid.
struct AdmissibilityConstants {
    double D = 0.0;              // sup |sigma f(sigma)|
    double B_times_lambda = 0.0; // lambda * sup |f(sigma)|
    double gamma = 0.0;          // sup |1 - sigma f(sigma)|
    double gamma_nu = 0.0;       // sup |1 - sigma f(sigma)| sigma^nu / lambda^nu
    double nu_bar = 1.0;

    [[nodiscard]] bool all_at_most(double bound) const {
        return D <= bound && B_times_lambda <= bound && gamma <= bound && gamma_nu <= bound;
    }
};

namespace spectral {

/// Filter at a single eigenvalue. Not defined for two_step, which needs the
/// factor pair.
[[nodiscard]] double filter_value(const FilterSpec& spec, double sigma);

/// Filter at sigma = task_sigma * object_sigma. two_step evaluates
/// 1 / ((task_sigma + lambda_t)(object_sigma + lambda_d)); the other kinds
/// only see the product.
[[nodiscard]] double filter_value(const FilterSpec& spec, double task_sigma, double object_sigma);

/// Dual matrix W f(Lambda) W^T vec(Y) over the full Kronecker eigenbasis.
[[nodiscard]] PairwiseModel fit_by_filter(const EigenSystem& object_eigen, const EigenSystem& task_eigen,
                                          const Matrix& labels, const FilterSpec& spec);

/// Evaluates the four admissibility suprema at exponent `nu`. For two_step
/// the grid is applied per factor and pairs with product above kappa_sq
/// are skipped.
[[nodiscard]] AdmissibilityConstants verify_admissibility(const FilterSpec& spec, std::span<const double> sigma_grid,
                                                          double kappa_sq, double nu = 1.0);

/// Largest eigenvalue product of the two training kernels; a sample
/// estimate of kappa^2.
[[nodiscard]] double kappa_sq(const EigenSystem& object_eigen, const EigenSystem& task_eigen);

/// `count` log-spaced points from lo to hi inclusive.
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, std::size_t count);

} // namespace spectral
} // namespace dyad
