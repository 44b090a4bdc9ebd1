#include "shortpanel/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace shortpanel::linalg {

namespace {

constexpr double kOrthoTol = 1e-8;
constexpr double kResidualTol = 1e-8;

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

}  // namespace

SymMatrix::SymMatrix(Matrix m) {
  if (m.rows() != m.cols()) throw InvalidInput("SymMatrix: matrix is not square");
  require_finite(m, "SymMatrix");
  m_ = 0.5 * (m + m.transpose());
}

void apply_sign_convention(Matrix& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    auto col = columns.col(j);
    if (col.size() == 0) continue;
    const double max_abs = col.cwiseAbs().maxCoeff();
    if (max_abs == 0.0) continue;
    // first entry within rounding of the maximum magnitude decides the sign
    Eigen::Index pick = 0;
    while (std::abs(col(pick)) < max_abs * (1.0 - 1e-12)) ++pick;
    if (col(pick) < 0.0) col = -col;
  }
}

SymEig sym_eig(const SymMatrix& s) {
  const Eigen::Index d = s.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw InvalidInput("sym_eig: eigensolver did not converge");

  // Eigen returns ascending order; stable descending sort keeps tie order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Vector& asc = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return asc(a) > asc(b); });

  SymEig out{Vector(d), Matrix(d, d)};
  for (Eigen::Index j = 0; j < d; ++j) {
    out.values(j) = asc(order[static_cast<std::size_t>(j)]);
    out.vectors.col(j) = solver.eigenvectors().col(order[static_cast<std::size_t>(j)]);
  }
  apply_sign_convention(out.vectors);
  return out;
}

Vector sym_eigvals(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InvalidInput("sym_eigvals: eigensolver did not converge");
  return solver.eigenvalues().reverse();
}

SymMatrix second_moment(const Matrix& x) {
  if (x.rows() < 1 || x.cols() < 1) throw InvalidInput("second_moment: empty input");
  require_finite(x, "second_moment");
  Matrix m = Matrix::Zero(x.cols(), x.cols());
  m.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / static_cast<double>(x.rows()));
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose().triangularView<Eigen::StrictlyUpper>();
  return SymMatrix(std::move(m));
}

Matrix complement_basis(const Matrix& b) {
  const Eigen::Index t = b.rows();
  const Eigen::Index k = b.cols();
  if (k >= t) throw InvalidInput("complement_basis: need k < T");
  require_finite(b, "complement_basis");
  if (k > 0 && (b.transpose() * b - Matrix::Identity(k, k)).norm() > kOrthoTol)
    throw InvalidInput("complement_basis: basis columns are not orthonormal");

  const Matrix m = Matrix::Identity(t, t) - b * b.transpose();
  const Eigen::Index want = t - k;
  Matrix q(t, want);
  Eigen::Index found = 0;
  for (Eigen::Index c = 0; c < t && found < want; ++c) {
    Vector v = m.col(c);
    // two passes of classical Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass) {
      if (k > 0) v -= b * (b.transpose() * v);
      if (found > 0) v -= q.leftCols(found) * (q.leftCols(found).transpose() * v);
    }
    const double norm = v.norm();
    if (norm < kResidualTol) continue;
    q.col(found++) = v / norm;
  }
  if (found < want)
    throw DegenerateProjector("complement_basis: found " + std::to_string(found) + " of " +
                              std::to_string(want) + " complement directions");
  apply_sign_convention(q);
  return q;
}

ProjectorPair ProjectorPair::from_basis(const Matrix& basis) {
  ProjectorPair p;
  p.basis = basis;
  p.complement = complement_basis(basis);
  const Eigen::Index t = basis.rows();
  p.projector = Matrix::Identity(t, t) - basis * basis.transpose();
  return p;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  require_finite(a, "kron");
  require_finite(b, "kron");
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix commutation_matrix(int t) {
  if (t < 1) throw InvalidInput("commutation_matrix: T must be positive");
  const Eigen::Index tt = static_cast<Eigen::Index>(t) * t;
  Matrix k = Matrix::Zero(tt, tt);
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < t; ++j) k(i + j * t, j + i * t) = 1.0;
  return k;
}

Matrix orthonormal_range(const Matrix& a) {
  require_finite(a, "orthonormal_range");
  if (a.cols() == 0) return Matrix(a.rows(), 0);
  if (a.cols() > a.rows()) throw InvalidInput("orthonormal_range: more columns than rows");
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < a.cols()) throw InvalidInput("orthonormal_range: rank-deficient input");
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  apply_sign_convention(q);
  return q;
}

}  // namespace shortpanel::linalg
