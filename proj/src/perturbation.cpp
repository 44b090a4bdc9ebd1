#include "shortpanel/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace shortpanel::perturbation {

namespace {

constexpr double kOrthoTol = 1e-8;
constexpr double kEigFloor = 1e-10;

void check_psi(const LowRankSym& a, const SymMatrix& psi) {
  if (psi.dim() != a.dim()) throw InvalidInput("perturbation: Psi dimension does not match A");
}

double remainder_bound(const LowRankSym& a) {
  const double kp1 = static_cast<double>(a.dim() + 1);
  return 1.0 / (3.0 * a.inverse_norm() * std::pow(kp1, 1.5));
}

}  // namespace

LowRankSym::LowRankSym(Vector eigenvalues, Matrix eigenvectors)
    : d_(std::move(eigenvalues)), u_(std::move(eigenvectors)) {
  if (d_.size() != u_.cols()) throw InvalidInput("LowRankSym: eigenvalue/eigenvector count mismatch");
  if (u_.cols() >= u_.rows()) throw InvalidInput("LowRankSym: rank must be below the dimension");
  q_ = linalg::complement_basis(u_);
  validate();
}

LowRankSym LowRankSym::from_matrix(const SymMatrix& a, int rank) {
  if (rank < 1 || rank >= a.dim()) throw InvalidInput("LowRankSym::from_matrix: rank out of range");
  const linalg::SymEig eig = linalg::sym_eig(a);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(a.dim()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return std::abs(eig.values(x)) > std::abs(eig.values(y));
  });
  // keep the retained pairs in descending eigenvalue order
  std::sort(order.begin(), order.begin() + rank);
  Vector d(rank);
  Matrix u(a.dim(), rank);
  for (int j = 0; j < rank; ++j) {
    d(j) = eig.values(order[static_cast<std::size_t>(j)]);
    u.col(j) = eig.vectors.col(order[static_cast<std::size_t>(j)]);
  }
  return LowRankSym(std::move(d), std::move(u));
}

LowRankSym LowRankSym::with_null_basis(Matrix q) const {
  LowRankSym out;
  out.d_ = d_;
  out.u_ = u_;
  out.q_ = std::move(q);
  out.validate();
  return out;
}

void LowRankSym::validate() const {
  const Eigen::Index k = u_.cols();
  const Eigen::Index kk = u_.rows();
  if (q_.rows() != kk || q_.cols() != kk - k) throw InvalidInput("LowRankSym: null basis has wrong shape");
  if ((u_.transpose() * u_ - Matrix::Identity(k, k)).norm() > kOrthoTol)
    throw InvalidInput("LowRankSym: eigenvectors are not orthonormal");
  if ((q_.transpose() * q_ - Matrix::Identity(kk - k, kk - k)).norm() > kOrthoTol)
    throw InvalidInput("LowRankSym: null basis is not orthonormal");
  if ((u_.transpose() * q_).norm() > kOrthoTol)
    throw InvalidInput("LowRankSym: null basis is not orthogonal to the eigenvectors");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::isfinite(d_(i)) || std::abs(d_(i)) < kEigFloor)
      throw InvalidInput("LowRankSym: non-zero eigenvalues must exceed 1e-10 in magnitude");
    for (Eigen::Index j = i + 1; j < k; ++j)
      if (std::abs(d_(i) - d_(j)) < kEigFloor) throw InvalidInput("LowRankSym: eigenvalues must be distinct");
  }
}

double LowRankSym::inverse_norm() const { return d_.cwiseInverse().norm(); }

double LowRankSym::proximity(int j) const {
  if (j < 1 || j > rank()) throw InvalidInput("LowRankSym::proximity: index out of range");
  const double lj = d_(j - 1);
  double rho = 1.0 / std::abs(lj);  // null eigenvalue
  for (Eigen::Index l = 0; l < rank(); ++l)
    if (l != j - 1) rho += 1.0 / std::abs(lj - d_(l));
  return rho;
}

SmallEigApproximation small_eig_second_order(const LowRankSym& a, const SymMatrix& psi) {
  check_psi(a, psi);
  const Matrix& q = a.null_basis();
  const Matrix& u = a.eigenvectors();
  const Matrix qpq = q.transpose() * psi.matrix() * q;
  const Matrix qpu = q.transpose() * psi.matrix() * u;
  const Matrix reduced = qpq - qpu * a.eigenvalues().cwiseInverse().asDiagonal() * qpu.transpose();

  SmallEigApproximation out;
  out.values = linalg::sym_eigvals(SymMatrix(reduced));
  out.psi_norm = psi.matrix().norm();
  out.bound = remainder_bound(a);
  out.within_bound = out.psi_norm <= out.bound;
  return out;
}

SmallEigApproximation small_eig_first_order(const LowRankSym& a, const SymMatrix& psi) {
  check_psi(a, psi);
  const Matrix& q = a.null_basis();
  SmallEigApproximation out;
  out.values = linalg::sym_eigvals(SymMatrix(q.transpose() * psi.matrix() * q));
  out.psi_norm = psi.matrix().norm();
  out.bound = remainder_bound(a);
  out.within_bound = out.psi_norm <= out.bound;
  return out;
}

LargeEigApproximation large_eig_eigvec_first_order(const LowRankSym& a, const SymMatrix& psi, int j) {
  check_psi(a, psi);
  if (j < 1 || j > a.rank()) throw InvalidInput("large_eig_eigvec_first_order: j out of range");
  const Eigen::Index jj = j - 1;
  const Vector& d = a.eigenvalues();
  const Matrix& u = a.eigenvectors();
  const Matrix& q = a.null_basis();
  const double lj = d(jj);
  const Vector psi_uj = psi.matrix() * u.col(jj);

  LargeEigApproximation out;
  out.value = lj + u.col(jj).dot(psi_uj);

  // null-space projector P_0 = QQ' with lambda_0 = 0
  Vector v = u.col(jj) + (q * (q.transpose() * psi_uj)) / lj;
  double gap = std::abs(lj);
  for (Eigen::Index l = 0; l < a.rank(); ++l) {
    if (l == jj) continue;
    v += u.col(l) * (u.col(l).dot(psi_uj) / (lj - d(l)));
    gap = std::min(gap, std::abs(lj - d(l)));
  }
  out.vector = v.normalized();
  out.min_gap = gap;
  out.within_bound = psi.matrix().norm() < 0.5 * gap;
  return out;
}

}  // namespace shortpanel::perturbation
