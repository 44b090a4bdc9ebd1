#pragma once

#include <Eigen/Dense>

#include "shortpanel/errors.hpp"

namespace shortpanel::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Real symmetric matrix. The input is symmetrized as (S + S')/2 on
/// construction, so the stored entries are exactly symmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m);

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Eigenvalues in non-increasing order; column j of `vectors` pairs with
/// values[j]. Each column has its largest-magnitude entry positive.
struct SymEig {
  Vector values;
  Matrix vectors;
};

/// Orthonormal basis of a k-dimensional subspace of R^T together with an
/// orthonormal basis of its complement and the residual projector
/// I - basis * basis'.
struct ProjectorPair {
  Matrix basis;
  Matrix complement;
  Matrix projector;

  static ProjectorPair from_basis(const Matrix& basis);
};

SymEig sym_eig(const SymMatrix& s);

/// Eigenvalues only, non-increasing.
Vector sym_eigvals(const SymMatrix& s);

/// X'X / rows(X). Rows index the averaging dimension.
SymMatrix second_moment(const Matrix& x);

/// Orthonormal basis of the orthogonal complement of range(B), obtained by
/// Gram-Schmidt on the leading columns of I - BB'. Columns whose residual
/// norm falls below 1e-8 are skipped.
Matrix complement_basis(const Matrix& b);

Matrix kron(const Matrix& a, const Matrix& b);

/// K_T with K_T vec(A) = vec(A') for T x T matrices (column-major vec).
Matrix commutation_matrix(int t);

/// Thin orthonormal basis for range(A) via Householder QR, columns
/// normalized by the same sign convention as sym_eig. Requires full column
/// rank (InvalidInput otherwise).
Matrix orthonormal_range(const Matrix& a);

/// Flip each column so that its largest-magnitude entry is positive.
void apply_sign_convention(Matrix& columns);

inline Vector vec(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// Reusable eigenvalue-only solver for hot simulation loops. Skips the
/// validation done by sym_eigvals; the input must be symmetric.
class SpectrumWorkspace {
 public:
  explicit SpectrumWorkspace(Eigen::Index dim) : solver_(dim), values_(dim) {}

  const Vector& descending(const Matrix& s) {
    solver_.compute(s, Eigen::EigenvaluesOnly);
    values_ = solver_.eigenvalues().reverse();
    return values_;
  }

 private:
  Eigen::SelfAdjointEigenSolver<Matrix> solver_;
  Vector values_;
};

}  // namespace shortpanel::linalg
