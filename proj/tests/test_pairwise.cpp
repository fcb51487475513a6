#include "dyad/error.hpp"
#include "dyad/pairwise.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace dyad;

namespace {

Matrix dense_tikhonov(const Matrix& k, const Matrix& g, const Matrix& y, double lambda) {
    const Matrix gamma = oracle::dense_kron(g, k);
    const Vector alpha = oracle::solve(oracle::shifted(gamma, lambda), oracle::stack_columns(y));
    return oracle::unstack_columns(alpha, y.rows(), y.cols());
}

double double_sum(const Matrix& a, const Vector& k, const Vector& g) {
    double sum = 0.0;
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) sum += a(i, j) * k(i) * g(j);
    return sum;
}

} // namespace

TEST_CASE("tikhonov scalar and shrinkage") {
    const EigenSystem one = linalg::psd_eigen(Matrix::Ones(1, 1));
    CHECK(pairwise::fit_pairwise_tikhonov(one, one, Matrix::Ones(1, 1), 1.0).dual_matrix(0, 0) == doctest::Approx(0.5));
    CHECK_THROWS_AS((void)pairwise::fit_pairwise_tikhonov(one, one, Matrix::Ones(1, 1), 0.0), InvalidParameter);

    std::mt19937_64 rng(113);
    const Matrix y = oracle::random_matrix(4, 3, rng);
    const PairwiseModel heavy = pairwise::fit_pairwise_tikhonov(linalg::psd_eigen(oracle::random_psd(4, rng)),
                                                                linalg::psd_eigen(oracle::random_psd(3, rng)), y, 1e9);
    CHECK(heavy.dual_matrix.norm() < 1e-6 * y.norm());
}

TEST_CASE("tikhonov matches the dense pair system") {
    std::mt19937_64 rng(127);
    for (Index n = 1; n <= 8; ++n) {
        for (Index m = 1; n * m <= 64 && m <= 8; ++m) {
            const Index rank_k = std::max<Index>(1, n - 1);
            const Matrix k = oracle::random_psd(n, rng, n > 3 ? rank_k : n);
            const Matrix g = oracle::random_psd(m, rng);
            const Matrix y = oracle::random_matrix(n, m, rng);
            const double lambda = oracle::uniform(rng, 0.05, 2.0);
            const PairwiseModel model =
                pairwise::fit_pairwise_tikhonov(linalg::psd_eigen(k), linalg::psd_eigen(g), y, lambda);
            CHECK(model.dual_matrix.rows() == n);
            CHECK(model.dual_matrix.cols() == m);
            CHECK(oracle::max_abs(model.dual_matrix - dense_tikhonov(k, g, y, lambda)) < 1e-9);
        }
    }
}

TEST_CASE("two-step OLS scalar and limits") {
    const EigenSystem one = linalg::psd_eigen(Matrix::Ones(1, 1));
    CHECK(pairwise::fit_pairwise_two_step_ols(one, one, Matrix::Ones(1, 1), 1.0, 1.0).dual_matrix(0, 0) ==
          doctest::Approx(0.25));
    CHECK_THROWS_AS((void)pairwise::fit_pairwise_two_step_ols(one, one, Matrix::Ones(1, 1), 0.0, 1.0),
                    InvalidParameter);

    std::mt19937_64 rng(131);
    const Matrix k = oracle::random_psd(4, rng);
    const Matrix g = oracle::random_psd(3, rng);
    const Matrix y = oracle::random_matrix(4, 3, rng);
    const Matrix limit = oracle::solve(k, y) * oracle::solve(g, Matrix::Identity(3, 3));
    const Matrix small =
        pairwise::fit_pairwise_two_step_ols(linalg::psd_eigen(k), linalg::psd_eigen(g), y, 1e-9, 1e-9).dual_matrix;
    CHECK(oracle::max_abs(small - limit) < 1e-5 * (1.0 + oracle::max_abs(limit)));
}

TEST_CASE("two-step OLS matches dense least squares on the shifted product kernel") {
    std::mt19937_64 rng(137);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix k = oracle::random_psd(5, rng, 3);
        const Matrix g = oracle::random_psd(4, rng, 2);
        const Matrix y = oracle::random_matrix(5, 4, rng);
        const double ld = oracle::uniform(rng, 0.1, 2.0);
        const double lt = oracle::uniform(rng, 0.1, 2.0);
        const Matrix gamma = oracle::dense_kron(oracle::shifted(g, lt), oracle::shifted(k, ld));
        // Normal equations of min ||y - Gamma alpha||^2.
        const Vector alpha =
            oracle::solve(gamma.transpose() * gamma, gamma.transpose() * oracle::stack_columns(y));
        const PairwiseModel model =
            pairwise::fit_pairwise_two_step_ols(linalg::psd_eigen(k), linalg::psd_eigen(g), y, ld, lt);
        CHECK(oracle::max_abs(model.dual_matrix - oracle::unstack_columns(alpha, 5, 4)) < 1e-8);
    }
}

TEST_CASE("predict_pair") {
    PairwiseModel model;
    model.dual_matrix = Matrix::Zero(2, 3);
    CHECK(pairwise::predict_pair(model, Vector::Ones(2), Vector::Ones(3)) == 0.0);
    CHECK_THROWS_AS((void)pairwise::predict_pair(model, Vector::Ones(3), Vector::Ones(3)), InvalidInput);

    model.dual_matrix = Matrix::Constant(1, 1, 0.25);
    CHECK(pairwise::predict_pair(model, Vector::Ones(1), Vector::Ones(1)) == 0.25);

    std::mt19937_64 rng(139);
    model.dual_matrix = oracle::random_matrix(4, 3, rng);
    for (int q = 0; q < 10; ++q) {
        const Vector k = oracle::random_matrix(4, 1, rng).col(0);
        const Vector g = oracle::random_matrix(3, 1, rng).col(0);
        CHECK(pairwise::predict_pair(model, k, g) == doctest::Approx(double_sum(model.dual_matrix, k, g)).epsilon(1e-12));
    }
}

TEST_CASE("predict_pair is bilinear") {
    std::mt19937_64 rng(149);
    PairwiseModel model;
    model.dual_matrix = oracle::random_matrix(5, 4, rng);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector k1 = oracle::random_matrix(5, 1, rng).col(0);
        const Vector k2 = oracle::random_matrix(5, 1, rng).col(0);
        const Vector g1 = oracle::random_matrix(4, 1, rng).col(0);
        const Vector g2 = oracle::random_matrix(4, 1, rng).col(0);
        const double a = oracle::uniform(rng, -2.0, 2.0);
        const double b = oracle::uniform(rng, -2.0, 2.0);
        const double lhs_k = pairwise::predict_pair(model, a * k1 + b * k2, g1);
        const double rhs_k = a * pairwise::predict_pair(model, k1, g1) + b * pairwise::predict_pair(model, k2, g1);
        CHECK(lhs_k == doctest::Approx(rhs_k).epsilon(1e-10));
        const double lhs_g = pairwise::predict_pair(model, k1, a * g1 + b * g2);
        const double rhs_g = a * pairwise::predict_pair(model, k1, g1) + b * pairwise::predict_pair(model, k1, g2);
        CHECK(lhs_g == doctest::Approx(rhs_g).epsilon(1e-10));
    }
}

TEST_CASE("two-step OLS reproduces training labels in sample") {
    // With the delta terms included, the shifted product kernel interpolates.
    std::mt19937_64 rng(151);
    const Matrix k = oracle::random_psd(4, rng);
    const Matrix g = oracle::random_psd(3, rng);
    const Matrix y = oracle::random_matrix(4, 3, rng);
    const PairwiseModel model =
        pairwise::fit_pairwise_two_step_ols(linalg::psd_eigen(k), linalg::psd_eigen(g), y, 0.3, 0.6);
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 3; ++j)
            CHECK(pairwise::predict_pair(model, k.col(i), g.col(j), i, j) == doctest::Approx(y(i, j)).epsilon(1e-9));
    CHECK_THROWS_AS((void)pairwise::predict_pair(model, k.col(0), g.col(0), Index{4}, Index{0}), InvalidInput);
}

TEST_CASE("predict_pairs agrees with predict_pair") {
    std::mt19937_64 rng(157);
    PairwiseModel model;
    model.dual_matrix = oracle::random_matrix(4, 3, rng);
    const Matrix objects = oracle::random_matrix(5, 4, rng);
    const Matrix tasks = oracle::random_matrix(2, 3, rng);
    const Matrix p = pairwise::predict_pairs(model, objects, tasks);
    REQUIRE(p.rows() == 5);
    REQUIRE(p.cols() == 2);
    for (Index q = 0; q < 5; ++q)
        for (Index s = 0; s < 2; ++s)
            CHECK(p(q, s) == doctest::Approx(double_sum(model.dual_matrix, objects.row(q), tasks.row(s))).epsilon(1e-12));
}

TEST_CASE("loo_tikhonov equals retraining without each pair") {
    std::mt19937_64 rng(163);
    for (int trial = 0; trial < 4; ++trial) {
        const Index n = 4;
        const Index m = 3;
        const Matrix k = oracle::random_psd(n, rng, trial % 2 == 0 ? n : 2);
        const Matrix g = oracle::random_psd(m, rng);
        const Matrix y = oracle::random_matrix(n, m, rng);
        const double lambda = 0.4;
        const Matrix gamma = oracle::dense_kron(g, k);
        const Vector yv = oracle::stack_columns(y);
        Vector expected(n * m);
        for (Index p = 0; p < n * m; ++p) {
            const Matrix rest = oracle::drop(gamma, p, p);
            Vector y_rest(n * m - 1);
            Vector cross(n * m - 1);
            for (Index q = 0, r = 0; q < n * m; ++q) {
                if (q == p) continue;
                y_rest(r) = yv(q);
                cross(r++) = gamma(p, q);
            }
            expected(p) = cross.dot(oracle::solve(oracle::shifted(rest, lambda), y_rest).col(0));
        }
        const Matrix loo = pairwise::loo_tikhonov(linalg::psd_eigen(k), linalg::psd_eigen(g), y, lambda);
        CHECK(oracle::max_abs(loo - oracle::unstack_columns(expected, n, m)) < 1e-8);
    }
}
