#include "dyad/error.hpp"
#include "dyad/kernels.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <map>
#include <string>
#include <vector>

using namespace dyad;

namespace {

// Number of (position in s, position in t) pairs holding the same k-mer.
double brute_spectrum(const std::string& s, const std::string& t, std::size_t k) {
    double count = 0.0;
    for (std::size_t i = 0; i + k <= s.size(); ++i)
        for (std::size_t j = 0; j + k <= t.size(); ++j)
            if (s.compare(i, k, t, j, k) == 0) count += 1.0;
    return count;
}

std::string random_sequence(std::mt19937_64& rng, std::size_t len) {
    static const std::string alphabet = "ACDEFGHIKL";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[pick(rng)]);
    return s;
}

} // namespace

TEST_CASE("linear and gaussian kernel values") {
    Matrix x(1, 2);
    x << 1, 2;
    Matrix y(1, 2);
    y << 3, 4;
    KernelSpec linear;
    CHECK(kernels::kernel_matrix(linear, x, y)(0, 0) == 11.0);

    KernelSpec gaussian{KernelKind::gaussian, 1.0};
    CHECK(kernels::kernel_matrix(gaussian, x, x)(0, 0) == 1.0);
    CHECK(kernels::kernel_matrix(gaussian, x, y)(0, 0) == doctest::Approx(std::exp(-8.0)));
}

TEST_CASE("feature kernels are symmetric PSD and normalize to unit diagonal") {
    std::mt19937_64 rng(4);
    const Matrix x = oracle::random_matrix(8, 3, rng);
    for (auto spec : {KernelSpec{KernelKind::linear}, KernelSpec{KernelKind::gaussian, 0.5},
                      KernelSpec{KernelKind::linear, 1.0, 3, true}}) {
        const Matrix k = kernels::kernel_matrix(spec, x, x);
        CHECK(oracle::max_abs(k - k.transpose()) < 1e-12);
        Eigen::SelfAdjointEigenSolver<Matrix> solver(k);
        CHECK(solver.eigenvalues().minCoeff() >= -1e-8 * solver.eigenvalues().maxCoeff());
        if (spec.normalize || spec.kind == KernelKind::gaussian)
            CHECK(oracle::max_abs(k.diagonal() - Vector::Ones(8)) < 1e-12);
    }
}

TEST_CASE("feature kernel errors") {
    KernelSpec linear;
    CHECK_THROWS_AS((void)kernels::kernel_matrix(linear, Matrix(0, 2), Matrix::Ones(1, 2)), InvalidInput);
    CHECK_THROWS_AS((void)kernels::kernel_matrix(linear, Matrix::Ones(1, 2), Matrix::Ones(1, 3)), InvalidInput);
    KernelSpec bad{KernelKind::gaussian, 0.0};
    CHECK_THROWS_AS((void)kernels::kernel_matrix(bad, Matrix::Ones(1, 2), Matrix::Ones(1, 2)), InvalidParameter);
}

TEST_CASE("spectrum kernel counts shared k-mers") {
    CHECK(kernels::spectrum_kernel("AAAA", "AAAA", 3) == brute_spectrum("AAAA", "AAAA", 3));
    CHECK(kernels::spectrum_kernel("AAAA", "AAAA", 3) == 4.0);
    CHECK(kernels::spectrum_kernel("ABCD", "XBCDY", 3) == 1.0);
    CHECK_THROWS_AS((void)kernels::spectrum_kernel("AA", "AAAA", 3), InvalidInput);

    std::mt19937_64 rng(8);
    std::vector<std::string> seqs;
    for (int i = 0; i < 12; ++i) seqs.push_back(random_sequence(rng, 8 + static_cast<std::size_t>(i)));
    KernelSpec spec{KernelKind::spectrum, 1.0, 2};
    const Matrix k = kernels::kernel_matrix(spec, seqs, seqs);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        for (std::size_t j = 0; j < seqs.size(); ++j)
            CHECK(k(static_cast<Index>(i), static_cast<Index>(j)) == brute_spectrum(seqs[i], seqs[j], 2));
    }
    CHECK(oracle::max_abs(k - k.transpose()) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(k);
    CHECK(solver.eigenvalues().minCoeff() >= -1e-8 * solver.eigenvalues().maxCoeff());

    spec.normalize = true;
    const Matrix kn = kernels::kernel_matrix(spec, seqs, seqs);
    CHECK(oracle::max_abs(kn.diagonal() - Vector::Ones(12)) < 1e-12);
    CHECK(kn(0, 1) == doctest::Approx(k(0, 1) / std::sqrt(k(0, 0) * k(1, 1))));
}

TEST_CASE("spectrum self-kernel is the squared norm of the k-mer count vector") {
    const std::string s = "MKVLAAGMKVLAQ";
    std::map<std::string, double> counts;
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) counts[s.substr(i, 3)] += 1.0;
    double sq = 0.0;
    for (const auto& [kmer, c] : counts) sq += c * c;
    CHECK(kernels::spectrum_kernel(s, s, 3) == sq);
}

TEST_CASE("delta kernel") {
    CHECK(kernels::delta_kernel(std::string("a"), std::string("a")) == 1);
    CHECK(kernels::delta_kernel(std::string("a"), std::string("b")) == 0);
    const std::vector<std::string> ids{"x", "y", "z"};
    CHECK(kernels::delta_matrix(ids, ids) == Matrix::Identity(3, 3));
    KernelSpec delta{KernelKind::delta};
    CHECK(kernels::kernel_matrix(delta, ids, ids) == Matrix::Identity(3, 3));
}

TEST_CASE("pairwise kernel matrix") {
    PairwiseKernelSpec tensor;
    CHECK(kernels::pairwise_kernel_matrix(tensor, Matrix::Identity(2, 2), Matrix::Identity(2, 2)) ==
          Matrix::Identity(4, 4));

    PairwiseKernelSpec shifted;
    shifted.variant = TwoStepShift{1.0, 1.0};
    CHECK(kernels::pairwise_kernel_matrix(shifted, Matrix::Ones(1, 1), Matrix::Ones(1, 1))(0, 0) == 4.0);

    std::mt19937_64 rng(6);
    const Matrix k = oracle::random_psd(3, rng);
    const Matrix g = oracle::random_psd(2, rng);
    const Matrix gamma = kernels::pairwise_kernel_matrix(tensor, k, g);
    // Pair (i, j) sits at i + 3 j.
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 2; ++j)
            for (Index ii = 0; ii < 3; ++ii)
                for (Index jj = 0; jj < 2; ++jj) CHECK(gamma(i + 3 * j, ii + 3 * jj) == doctest::Approx(k(i, ii) * g(j, jj)));

    shifted.variant = TwoStepShift{0.3, 0.7};
    const Matrix two = kernels::pairwise_kernel_matrix(shifted, k, g);
    CHECK(oracle::max_abs(two - oracle::dense_kron(oracle::shifted(g, 0.7), oracle::shifted(k, 0.3))) < 1e-14);

    CHECK_THROWS_AS((void)kernels::pairwise_kernel_matrix(tensor, k, g, 5), CapacityError);
    shifted.variant = TwoStepShift{0.0, 1.0};
    CHECK_THROWS_AS((void)kernels::pairwise_kernel_matrix(shifted, k, g), InvalidParameter);
}
