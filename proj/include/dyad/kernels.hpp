#pragma once

#include "dyad/linalg.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace dyad {

enum class KernelKind { linear, gaussian, spectrum, delta, precomputed };

struct KernelSpec {
    KernelKind kind = KernelKind::linear;
    double gamma = 1.0;      // gaussian width, exp(-gamma * |x - y|^2)
    std::size_t k = 3;       // spectrum k-mer length
    bool normalize = false;  // k(x,y) / sqrt(k(x,x) k(y,y))

    void validate() const;
};

[[nodiscard]] std::string_view to_string(KernelKind kind);
[[nodiscard]] KernelKind parse_kernel_kind(std::string_view name);

struct TensorProduct {};
struct TwoStepShift {
    double lambda_d = 1.0;
    double lambda_t = 1.0;
};

struct PairwiseKernelSpec {
    KernelSpec object_kernel;
    KernelSpec task_kernel;
    std::variant<TensorProduct, TwoStepShift> variant;

    void validate() const;
};

namespace kernels {

inline constexpr Index kDefaultMaterializationCap = 4096;

/// Kernel matrix between the rows of two feature matrices (linear, gaussian).
[[nodiscard]] Matrix kernel_matrix(const KernelSpec& spec, const Matrix& left, const Matrix& right);

/// Kernel matrix between two sequence or identity collections (spectrum, delta).
[[nodiscard]] Matrix kernel_matrix(const KernelSpec& spec, std::span<const std::string> left,
                                   std::span<const std::string> right);

/// Cosine-normalizes a precomputed square kernel in place of evaluating it.
[[nodiscard]] Matrix normalize_square(const Matrix& kernel);

template <typename T>
[[nodiscard]] constexpr int delta_kernel(const T& left, const T& right) {
    return left == right ? 1 : 0;
}

[[nodiscard]] Matrix delta_matrix(std::span<const std::string> left, std::span<const std::string> right);

/// Number of common contiguous k-mers, sum_w count_s(w) * count_t(w).
[[nodiscard]] double spectrum_kernel(std::string_view s, std::string_view t, std::size_t k);

/// Dense kernel over object-task pairs.
///
/// Pairs are indexed as i + j*n (object i, task j), the column-stacking order
/// of an n x m label matrix, so the tensor-product variant yields G kron K and
/// the two-step variant (G + lambda_t I) kron (K + lambda_d I). Entry
/// ((i,j),(i',j')) equals K(i,i') G(j,j') in either case.
[[nodiscard]] Matrix pairwise_kernel_matrix(const PairwiseKernelSpec& spec, const Matrix& object_kernel,
                                            const Matrix& task_kernel, Index cap = kDefaultMaterializationCap);

} // namespace kernels
} // namespace dyad
