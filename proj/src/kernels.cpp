#include "dyad/kernels.hpp"

#include "dyad/error.hpp"

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

namespace dyad {

void KernelSpec::validate() const {
    if (kind == KernelKind::gaussian && !(gamma > 0.0)) throw InvalidParameter("gaussian kernel requires gamma > 0");
    if (kind == KernelKind::spectrum && k < 1) throw InvalidParameter("spectrum kernel requires k >= 1");
}

void PairwiseKernelSpec::validate() const {
    object_kernel.validate();
    task_kernel.validate();
    if (const auto* shift = std::get_if<TwoStepShift>(&variant)) {
        if (!(shift->lambda_d > 0.0) || !(shift->lambda_t > 0.0))
            throw InvalidParameter("two-step pairwise kernel requires lambda_d > 0 and lambda_t > 0");
    }
}

std::string_view to_string(KernelKind kind) {
    switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::spectrum: return "spectrum";
    case KernelKind::delta: return "delta";
    case KernelKind::precomputed: return "precomputed";
    }
    return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "linear") return KernelKind::linear;
    if (name == "gaussian") return KernelKind::gaussian;
    if (name == "spectrum") return KernelKind::spectrum;
    if (name == "delta") return KernelKind::delta;
    if (name == "precomputed") return KernelKind::precomputed;
    throw InvalidParameter("unknown kernel kind '" + std::string(name) + "'");
}

namespace kernels {
namespace {

using KmerCounts = std::unordered_map<std::string_view, double>;

KmerCounts count_kmers(std::string_view s, std::size_t k) {
    if (s.size() < k)
        throw InvalidInput("spectrum kernel: sequence of length " + std::to_string(s.size()) +
                           " is shorter than k = " + std::to_string(k));
    KmerCounts counts;
    for (std::size_t i = 0; i + k <= s.size(); ++i) counts[s.substr(i, k)] += 1.0;
    return counts;
}

double dot(const KmerCounts& a, const KmerCounts& b) {
    const KmerCounts& small = a.size() <= b.size() ? a : b;
    const KmerCounts& large = a.size() <= b.size() ? b : a;
    double acc = 0.0;
    for (const auto& [kmer, count] : small) {
        if (auto it = large.find(kmer); it != large.end()) acc += count * it->second;
    }
    return acc;
}

void apply_normalization(Matrix& k, const Vector& left_self, const Vector& right_self) {
    for (Index i = 0; i < k.rows(); ++i) {
        for (Index j = 0; j < k.cols(); ++j) {
            const double denom = std::sqrt(left_self(i) * right_self(j));
            k(i, j) = denom > 0.0 ? k(i, j) / denom : 0.0;
        }
    }
}

} // namespace

double spectrum_kernel(std::string_view s, std::string_view t, std::size_t k) {
    if (k < 1) throw InvalidParameter("spectrum kernel requires k >= 1");
    return dot(count_kmers(s, k), count_kmers(t, k));
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& left, const Matrix& right) {
    spec.validate();
    if (left.rows() < 1 || right.rows() < 1) throw InvalidInput("kernel_matrix: empty input");
    if (left.cols() != right.cols())
        throw InvalidInput("kernel_matrix: feature dimensions differ (" + std::to_string(left.cols()) + " vs " +
                           std::to_string(right.cols()) + ")");
    linalg::require_finite(left, "kernel_matrix");
    linalg::require_finite(right, "kernel_matrix");

    Matrix k;
    Vector left_self;
    Vector right_self;
    switch (spec.kind) {
    case KernelKind::linear:
        k = left * right.transpose();
        left_self = left.rowwise().squaredNorm();
        right_self = right.rowwise().squaredNorm();
        break;
    case KernelKind::gaussian: {
        const Vector ln = left.rowwise().squaredNorm();
        const Vector rn = right.rowwise().squaredNorm();
        Matrix dist = (-2.0 * left * right.transpose()).colwise() + ln;
        dist.rowwise() += rn.transpose();
        k = (-spec.gamma * dist.cwiseMax(0.0)).array().exp().matrix();
        left_self = Vector::Ones(left.rows());
        right_self = Vector::Ones(right.rows());
        break;
    }
    default:
        throw InvalidParameter("kernel_matrix: kind '" + std::string(to_string(spec.kind)) +
                               "' does not operate on feature vectors");
    }
    if (spec.normalize) apply_normalization(k, left_self, right_self);
    return k;
}

Matrix kernel_matrix(const KernelSpec& spec, std::span<const std::string> left, std::span<const std::string> right) {
    spec.validate();
    if (left.empty() || right.empty()) throw InvalidInput("kernel_matrix: empty input");

    if (spec.kind == KernelKind::delta) return delta_matrix(left, right);
    if (spec.kind != KernelKind::spectrum)
        throw InvalidParameter("kernel_matrix: kind '" + std::string(to_string(spec.kind)) +
                               "' does not operate on sequences");

    std::vector<KmerCounts> lc;
    std::vector<KmerCounts> rc;
    lc.reserve(left.size());
    rc.reserve(right.size());
    for (const auto& s : left) lc.push_back(count_kmers(s, spec.k));
    for (const auto& s : right) rc.push_back(count_kmers(s, spec.k));

    const auto rows = static_cast<Index>(left.size());
    const auto cols = static_cast<Index>(right.size());
    Matrix k(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) k(i, j) = dot(lc[i], rc[j]);

    if (spec.normalize) {
        Vector ls(rows);
        Vector rs(cols);
        for (Index i = 0; i < rows; ++i) ls(i) = dot(lc[i], lc[i]);
        for (Index j = 0; j < cols; ++j) rs(j) = dot(rc[j], rc[j]);
        apply_normalization(k, ls, rs);
    }
    return k;
}

Matrix normalize_square(const Matrix& kernel) {
    if (kernel.rows() != kernel.cols()) throw InvalidInput("normalize_square: kernel must be square");
    const Vector diag = kernel.diagonal();
    Matrix k = kernel;
    apply_normalization(k, diag, diag);
    return k;
}

Matrix delta_matrix(std::span<const std::string> left, std::span<const std::string> right) {
    Matrix k(static_cast<Index>(left.size()), static_cast<Index>(right.size()));
    for (std::size_t i = 0; i < left.size(); ++i)
        for (std::size_t j = 0; j < right.size(); ++j)
            k(static_cast<Index>(i), static_cast<Index>(j)) = delta_kernel(left[i], right[j]);
    return k;
}

Matrix pairwise_kernel_matrix(const PairwiseKernelSpec& spec, const Matrix& object_kernel,
                              const Matrix& task_kernel, Index cap) {
    spec.validate();
    const Index n = object_kernel.rows();
    const Index m = task_kernel.rows();
    if (n < 1 || m < 1 || object_kernel.cols() != n || task_kernel.cols() != m)
        throw InvalidInput("pairwise_kernel_matrix: kernels must be square and non-empty");
    if ((object_kernel - object_kernel.transpose()).cwiseAbs().maxCoeff() > linalg::kSymmetryTolerance ||
        (task_kernel - task_kernel.transpose()).cwiseAbs().maxCoeff() > linalg::kSymmetryTolerance)
        throw InvalidInput("pairwise_kernel_matrix: kernels must be symmetric");
    if (n * m > cap)
        throw CapacityError("pairwise_kernel_matrix: " + std::to_string(n * m) + " pairs exceed the cap of " +
                            std::to_string(cap));

    if (const auto* shift = std::get_if<TwoStepShift>(&spec.variant)) {
        const Matrix k = object_kernel + shift->lambda_d * Matrix::Identity(n, n);
        const Matrix g = task_kernel + shift->lambda_t * Matrix::Identity(m, m);
        return linalg::kron(g, k);
    }
    return linalg::kron(task_kernel, object_kernel);
}

} // namespace kernels
} // namespace dyad
