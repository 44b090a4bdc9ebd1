#pragma once

#include <optional>

#include "shortpanel/linalg.hpp"

namespace shortpanel::stats {

using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

/// n x T panel of observations; row i is asset i, column t is period t.
class PanelData {
 public:
  explicit PanelData(Matrix y);

  const Matrix& y() const { return y_; }
  Eigen::Index n() const { return y_.rows(); }
  Eigen::Index T() const { return y_.cols(); }

 private:
  Matrix y_;
};

/// n x K instruments, rows aligned with a PanelData.
class InstrumentPanel {
 public:
  explicit InstrumentPanel(Matrix z);

  const Matrix& z() const { return z_; }
  Eigen::Index n() const { return z_.rows(); }
  Eigen::Index K() const { return z_.cols(); }

 private:
  Matrix z_;
};

/// Factor space estimate under the null of k factors and its residuals.
struct FactorFit {
  int k = 0;
  Matrix F_hat;      // T x k, F'F/T = I_k
  Matrix M_Fhat;     // T x T residual projector
  Matrix Q_hat;      // T x (T-k) complement basis
  Matrix residuals;  // n x T, row i = M_Fhat y_i

  Eigen::Index n() const { return residuals.rows(); }
  Eigen::Index T() const { return residuals.cols(); }
};

struct PortfolioAggregates {
  Matrix xi;        // T x K, row t = xi_t'
  SymMatrix v_xi;   // K x K
};

struct InstrumentFit {
  int k = 0;
  Matrix Xi_hat;       // T x K
  SymMatrix V_xi_hat;  // K x K
  Matrix Gamma_hat;    // K x k, top-k eigenvectors of V_xi_hat
  Matrix Pi_hat;       // K x (K-k)
  Matrix F_hat;        // T x k, Xi_hat * Gamma_hat
  FactorFit factor_fit;  // residual fit on the orthonormalized range of F_hat
};

/// xi_t = (1/n) sum_i z_i y_{i,t} and V_xi = (1/T) sum_t xi_t xi_t'.
PortfolioAggregates portfolio_aggregates(const PanelData& panel, const InstrumentPanel& instruments);

/// V_y = (1/n) sum_i y_i y_i' (T x T, no demeaning).
SymMatrix return_second_moment(const PanelData& panel);

/// Sum of the K-k smallest eigenvalues of V_xi, clamped at zero.
double stat_T(const SymMatrix& v_xi, int k);

/// delta_{k+1}(V_y) - delta_T(V_y).
double stat_S(const SymMatrix& v_y, int k);

/// Maximal ratio of consecutive eigenvalue spacings over j = k+1..k_star
/// (default k_star = T-2). Returns +infinity if a denominator is below 1e-14.
double stat_S_star(const SymMatrix& v_y, int k, std::optional<int> k_star = std::nullopt);

/// sqrt(n) (delta_k(V_y) - delta_{k+1}(V_y)), 1 <= k <= T-1.
double stat_Delta(const SymMatrix& v_y, int k, double n);

/// Spacing-ratio maximum on a descending spectrum, j = first..last (1-based).
double max_spacing_ratio(const Vector& descending, int first, int last);

/// Principal components fit: F_hat = sqrt(T) x top-k eigenvectors of V_y.
FactorFit pca_fit(const PanelData& panel, int k);

/// Residual fit from an orthonormal T x k basis of the factor space.
FactorFit factor_fit_from_basis(const PanelData& panel, const Matrix& basis);

/// Instrument route: Gamma_hat from V_xi, F_hat = Xi_hat Gamma_hat.
InstrumentFit iv_fit(const PanelData& panel, const InstrumentPanel& instruments, int k);

}  // namespace shortpanel::stats
