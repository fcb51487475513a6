#include "dyad/linalg.hpp"

#include "dyad/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dyad {

Matrix EigenSystem::reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
}

namespace linalg {
namespace {

// Flip each column so that its largest-magnitude entry is nonnegative. The
// first entry wins among equal magnitudes.
void canonicalize_signs(Matrix& vectors) {
    for (Index c = 0; c < vectors.cols(); ++c) {
        Index arg = 0;
        double best = -1.0;
        for (Index r = 0; r < vectors.rows(); ++r) {
            const double mag = std::abs(vectors(r, c));
            if (mag > best) {
                best = mag;
                arg = r;
            }
        }
        if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

// `values` must already be sorted descending. Keeps the leading block whose
// values exceed the relative rank tolerance.
EigenSystem truncate(Matrix vectors, Vector values) {
    const double largest = values.size() > 0 ? values(0) : 0.0;
    Index keep = 0;
    if (largest > 0.0) {
        const double cutoff = kRankTolerance * largest;
        while (keep < values.size() && values(keep) > cutoff) ++keep;
    }
    EigenSystem es;
    es.vectors = vectors.leftCols(keep);
    es.values = values.head(keep);
    canonicalize_signs(es.vectors);
    return es;
}

} // namespace

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw InvalidInput(std::string(what) + ": matrix contains non-finite entries");
}

EigenSystem economy_svd(const Matrix& features) {
    if (features.rows() < 1 || features.cols() < 1) throw InvalidInput("economy_svd: empty feature matrix");
    require_finite(features, "economy_svd");

    Eigen::BDCSVD<Matrix> svd(features, Eigen::ComputeThinU);
    const Vector sigma = svd.singularValues();
    Vector squared = sigma.array().square().matrix();
    return truncate(svd.matrixU(), std::move(squared));
}

EigenSystem psd_eigen(const Matrix& kernel) {
    if (kernel.rows() < 1 || kernel.rows() != kernel.cols())
        throw InvalidInput("psd_eigen: kernel must be square and non-empty");
    require_finite(kernel, "psd_eigen");
    const double asym = (kernel - kernel.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance)
        throw InvalidInput("psd_eigen: kernel is not symmetric (max deviation " + std::to_string(asym) + ")");

    const Matrix sym = 0.5 * (kernel + kernel.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("psd_eigen: eigensolver did not converge");

    const Index n = sym.rows();
    Matrix vectors = solver.eigenvectors().rowwise().reverse();
    Vector values = solver.eigenvalues().reverse();

    const double largest = std::max(values(0), 0.0);
    const double smallest = values(n - 1);
    if (smallest < 0.0 && smallest < -kNegativeTolerance * largest)
        throw InvalidInput("psd_eigen: kernel is not positive semi-definite (eigenvalue " +
                           std::to_string(smallest) + ")");
    values = values.cwiseMax(0.0);
    return truncate(std::move(vectors), std::move(values));
}

EigenSystem complete_basis(const EigenSystem& es) {
    const Index n = es.dim();
    const Index k = es.rank();
    if (k == n) return es;

    EigenSystem full;
    full.vectors.resize(n, n);
    full.values = Vector::Zero(n);
    full.vectors.leftCols(k) = es.vectors;
    full.values.head(k) = es.values;
    if (k == 0) {
        full.vectors.setIdentity();
        return full;
    }
    // The trailing columns of a full Householder Q span the orthogonal
    // complement of the retained eigenvectors.
    Eigen::HouseholderQR<Matrix> qr(es.vectors);
    const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    Matrix complement = q.rightCols(n - k);
    canonicalize_signs(complement);
    full.vectors.rightCols(n - k) = complement;
    return full;
}

Vector vec(const Matrix& x) {
    return Eigen::Map<const Vector>(x.data(), x.size());
}

Matrix unvec(const Vector& v, Index rows, Index cols) {
    if (rows < 0 || cols < 0 || v.size() != rows * cols)
        throw InvalidInput("unvec: length " + std::to_string(v.size()) + " does not match " + std::to_string(rows) +
                           "x" + std::to_string(cols));
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix kron_apply(const Matrix& a, const Matrix& b, const Matrix& x) {
    if (b.cols() != x.rows() || a.cols() != x.cols())
        throw InvalidInput("kron_apply: dimension mismatch");
    return b * x * a.transpose();
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace {

// Per-component weights w with (K + lambda I)^{-1} = c I + V diag(w) V^T,
// where c = 1/lambda for truncated systems and 0 otherwise.
Vector inverse_weights(const EigenSystem& es, double lambda) {
    Vector w = (es.values.array() + lambda).inverse().matrix();
    if (!es.full_rank()) w.array() -= 1.0 / lambda;
    return w;
}

} // namespace

Matrix shifted_inverse_apply(const EigenSystem& es, double lambda, const Matrix& m) {
    if (!(lambda > 0.0)) throw InvalidParameter("shifted_inverse_apply: lambda must be positive");
    if (m.rows() != es.dim()) throw InvalidInput("shifted_inverse_apply: row count does not match eigensystem");

    Matrix projected = es.vectors.transpose() * m;
    projected = inverse_weights(es, lambda).asDiagonal() * projected;
    Matrix out;
    if (es.full_rank()) {
        out.noalias() = es.vectors * projected;
    } else {
        out = m / lambda;
        out.noalias() += es.vectors * projected;
    }
    return out;
}

Matrix shifted_inverse_apply_right(const EigenSystem& es, double lambda, const Matrix& m) {
    if (!(lambda > 0.0)) throw InvalidParameter("shifted_inverse_apply_right: lambda must be positive");
    if (m.cols() != es.dim())
        throw InvalidInput("shifted_inverse_apply_right: column count does not match eigensystem");

    Matrix projected = m * es.vectors;
    projected = projected * inverse_weights(es, lambda).asDiagonal();
    Matrix out;
    if (es.full_rank()) {
        out.noalias() = projected * es.vectors.transpose();
    } else {
        out = m / lambda;
        out.noalias() += projected * es.vectors.transpose();
    }
    return out;
}

Vector shifted_inverse_diagonal(const EigenSystem& es, double lambda) {
    if (!(lambda > 0.0)) throw InvalidParameter("shifted_inverse_diagonal: lambda must be positive");
    const Vector scale = (es.values.array() + lambda).inverse().matrix();
    const Matrix sq = es.vectors.array().square().matrix();
    Vector diag = sq * scale;
    if (!es.full_rank()) {
        const Vector captured = sq.rowwise().sum();
        diag.array() += (1.0 - captured.array()).max(0.0) / lambda;
    }
    return diag;
}

} // namespace linalg
} // namespace dyad
