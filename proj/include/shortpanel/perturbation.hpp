#pragma once

#include "shortpanel/linalg.hpp"

namespace shortpanel::perturbation {

using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

/// Symmetric K x K matrix of rank k stored through its spectral factors
/// A = U diag(D) U', together with an orthonormal basis Q of its null space.
/// The non-zero eigenvalues must be distinct and bounded away from zero.
class LowRankSym {
 public:
  /// Q is built with linalg::complement_basis(U).
  LowRankSym(Vector eigenvalues, Matrix eigenvectors);

  /// Keeps the `rank` eigenpairs of largest magnitude.
  static LowRankSym from_matrix(const SymMatrix& a, int rank);

  /// Same matrix with a different orthonormal basis of the null space.
  LowRankSym with_null_basis(Matrix q) const;

  Eigen::Index dim() const { return u_.rows(); }
  Eigen::Index rank() const { return u_.cols(); }
  const Vector& eigenvalues() const { return d_; }
  const Matrix& eigenvectors() const { return u_; }
  const Matrix& null_basis() const { return q_; }
  Matrix matrix() const { return u_ * d_.asDiagonal() * u_.transpose(); }

  /// Frobenius norm of the generalized inverse, sqrt(sum_j d_j^-2).
  double inverse_norm() const;

  /// Sum over the other eigenvalues (including the null eigenvalue 0) of
  /// |lambda_j - lambda_l|^-1, for 1-based j.
  double proximity(int j) const;

 private:
  LowRankSym() = default;
  void validate() const;

  Vector d_;
  Matrix u_;
  Matrix q_;
};

struct SmallEigApproximation {
  Vector values;     // descending, length K - k
  double psi_norm;   // Frobenius norm of the perturbation
  double bound;      // 1 / (3 ||D^-1|| (K+1)^{3/2})
  bool within_bound; // false means the remainder bound is not guaranteed
};

/// delta_j(Q'PsiQ - Q'Psi U D^-1 U'Psi Q), approximating the K - k eigenvalues
/// of A + Psi that emanate from the null space, up to O(||D^-1||^2 K^4 ||Psi||^3).
SmallEigApproximation small_eig_second_order(const LowRankSym& a, const SymMatrix& psi);

/// delta_j(Q'PsiQ), accurate to O(||Psi||^2).
SmallEigApproximation small_eig_first_order(const LowRankSym& a, const SymMatrix& psi);

struct LargeEigApproximation {
  double value;
  Vector vector;      // unit norm
  double min_gap;     // min_{l != j} |lambda_j - lambda_l|, lambda_0 = 0 included
  bool within_bound;  // ||Psi||_F < min_gap / 2
};

/// First-order expansion of the j-th (1-based) non-zero eigenvalue and its
/// eigenvector: value delta_j(A) + U_j'PsiU_j, vector
/// U_j + sum_{l != j} (lambda_j - lambda_l)^-1 P_l Psi U_j, normalized.
LargeEigApproximation large_eig_eigvec_first_order(const LowRankSym& a, const SymMatrix& psi,
                                                   int j);

}  // namespace shortpanel::perturbation
