#include "shortpanel/stats.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace shortpanel::stats {

namespace {

constexpr double kSpacingFloor = 1e-14;

std::string bounds_message(const char* op, int k, const char* range) {
  return std::string(op) + ": k = " + std::to_string(k) + " outside " + range;
}

}  // namespace

PanelData::PanelData(Matrix y) : y_(std::move(y)) {
  if (y_.rows() < 2 || y_.cols() < 2) throw InvalidInput("PanelData: need n >= 2 and T >= 2");
  if (!y_.allFinite()) throw InvalidInput("PanelData: non-finite entries");
}

InstrumentPanel::InstrumentPanel(Matrix z) : z_(std::move(z)) {
  if (z_.cols() < 1 || z_.rows() < 1) throw InvalidInput("InstrumentPanel: need K >= 1");
  if (!z_.allFinite()) throw InvalidInput("InstrumentPanel: non-finite entries");
}

PortfolioAggregates portfolio_aggregates(const PanelData& panel, const InstrumentPanel& instruments) {
  if (instruments.n() != panel.n())
    throw InvalidInput("portfolio_aggregates: panel has " + std::to_string(panel.n()) +
                       " rows, instruments have " + std::to_string(instruments.n()));
  Matrix xi = panel.y().transpose() * instruments.z() / static_cast<double>(panel.n());
  SymMatrix v = linalg::second_moment(xi);
  return {std::move(xi), std::move(v)};
}

SymMatrix return_second_moment(const PanelData& panel) { return linalg::second_moment(panel.y()); }

double stat_T(const SymMatrix& v_xi, int k) {
  const auto kk = static_cast<int>(v_xi.dim());
  if (k < 0 || k >= kk) throw InvalidInput(bounds_message("stat_T", k, "[0, K-1]"));
  const Vector ev = linalg::sym_eigvals(v_xi);
  return std::max(0.0, ev.tail(kk - k).sum());
}

double stat_S(const SymMatrix& v_y, int k) {
  const auto t = static_cast<int>(v_y.dim());
  if (k < 0 || k > t - 2) throw InvalidInput(bounds_message("stat_S", k, "[0, T-2]"));
  const Vector ev = linalg::sym_eigvals(v_y);
  return std::max(0.0, ev(k) - ev(t - 1));
}

double max_spacing_ratio(const Vector& d, int first, int last) {
  double best = -std::numeric_limits<double>::infinity();
  for (int j = first; j <= last; ++j) {
    // 1-based j: (d_j - d_{j+1}) / (d_{j+1} - d_{j+2})
    const double num = d(j - 1) - d(j);
    const double den = d(j) - d(j + 1);
    if (den < kSpacingFloor) return std::numeric_limits<double>::infinity();
    best = std::max(best, num / den);
  }
  return best;
}

double stat_S_star(const SymMatrix& v_y, int k, std::optional<int> k_star) {
  const auto t = static_cast<int>(v_y.dim());
  const int ks = k_star.value_or(t - 2);
  if (k < 0 || k + 1 > ks || ks > t - 2)
    throw InvalidInput("stat_S_star: need k+1 <= k_star <= T-2 (k = " + std::to_string(k) +
                       ", k_star = " + std::to_string(ks) + ", T = " + std::to_string(t) + ")");
  return max_spacing_ratio(linalg::sym_eigvals(v_y), k + 1, ks);
}

double stat_Delta(const SymMatrix& v_y, int k, double n) {
  const auto t = static_cast<int>(v_y.dim());
  if (k < 1 || k > t - 1) throw InvalidInput(bounds_message("stat_Delta", k, "[1, T-1]"));
  const Vector ev = linalg::sym_eigvals(v_y);
  return std::sqrt(n) * std::max(0.0, ev(k - 1) - ev(k));
}

FactorFit factor_fit_from_basis(const PanelData& panel, const Matrix& basis) {
  const Eigen::Index t = panel.T();
  if (basis.rows() != t) throw InvalidInput("factor_fit_from_basis: basis has wrong row count");
  const auto k = static_cast<int>(basis.cols());
  if (k >= t) throw InvalidInput(bounds_message("factor_fit", k, "[0, T-1]"));
  FactorFit fit;
  fit.k = k;
  fit.F_hat = std::sqrt(static_cast<double>(t)) * basis;
  fit.M_Fhat = Matrix::Identity(t, t) - basis * basis.transpose();
  fit.Q_hat = linalg::complement_basis(basis);
  fit.residuals = panel.y() * fit.M_Fhat;
  return fit;
}

FactorFit pca_fit(const PanelData& panel, int k) {
  const Eigen::Index t = panel.T();
  if (k < 0 || k >= t) throw InvalidInput(bounds_message("pca_fit", k, "[0, T-1]"));
  if (k == 0) return factor_fit_from_basis(panel, Matrix(t, 0));
  const linalg::SymEig eig = linalg::sym_eig(return_second_moment(panel));
  return factor_fit_from_basis(panel, eig.vectors.leftCols(k));
}

InstrumentFit iv_fit(const PanelData& panel, const InstrumentPanel& instruments, int k) {
  const auto kk = static_cast<int>(instruments.K());
  if (k < 0 || k >= kk || k >= panel.T())
    throw InvalidInput(bounds_message("iv_fit", k, "[0, min(K, T) - 1]"));
  PortfolioAggregates agg = portfolio_aggregates(panel, instruments);

  InstrumentFit fit;
  fit.k = k;
  fit.Xi_hat = std::move(agg.xi);
  fit.V_xi_hat = std::move(agg.v_xi);
  const linalg::SymEig eig = linalg::sym_eig(fit.V_xi_hat);
  fit.Gamma_hat = eig.vectors.leftCols(k);
  fit.Pi_hat = linalg::complement_basis(fit.Gamma_hat);
  fit.F_hat = fit.Xi_hat * fit.Gamma_hat;
  fit.factor_fit = factor_fit_from_basis(panel, linalg::orthonormal_range(fit.F_hat));
  return fit;
}

}  // namespace shortpanel::stats
