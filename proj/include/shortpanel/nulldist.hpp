#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "shortpanel/linalg.hpp"
#include "shortpanel/random.hpp"
#include "shortpanel/stats.hpp"

namespace shortpanel::nulldist {

using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

// Variance models for the limiting Gaussian matrix Z of the residual second
// moments, and the weighted chi-square models for the instrument statistic.
struct IndepErrors {
  double eta;  // Var(Z_tt)
  double q;    // Var(Z_ts), t != s
};

/// theta = (q, q psi(0), ..., q psi(T-1)), length T + 1.
struct ArchParam {
  Vector theta;
};

/// Covariance of vec(Zbar*) on the (T-k)^2 projected space.
struct Nonparam {
  Matrix omega_bar;
};

/// weights = eigenvalues of sigma2 * Pi' Qzz Pi (sigma2 already included).
struct InstrHomo {
  double sigma2;
  Vector weights;
};

/// Non-negative eigenvalues of Lambda-hat, the (T-k)(K-k) largest.
struct InstrGeneral {
  Vector lambda;
};

using NullVarianceSpec = std::variant<IndepErrors, ArchParam, Nonparam, InstrHomo, InstrGeneral>;

struct SimulatedLaw {
  Vector draws;  // ascending
  std::uint64_t seed = 0;
  Warnings warnings;

  Eigen::Index R() const { return draws.size(); }
  /// Empirical quantile as order statistic ceil(p R) (1-based), p in (0,1].
  double quantile(double p) const;
};

double estimate_sigma2(const stats::FactorFit& fit);

struct EtaQEstimate {
  double eta;
  double q;
  double a, b, c, d;
  Warnings warnings;
};

EtaQEstimate estimate_eta_q(const stats::FactorFit& fit);

SymMatrix simulate_Z_indep(int T, double eta, double q, Rng& rng);

/// T^2 x T^2 covariance of vec(Z) under the ARCH-type variance model.
Matrix build_omega_arch(const Vector& theta);

struct ThetaEstimate {
  Vector theta;  // length T + 1
  Warnings warnings;

  double q() const { return theta(0); }
  /// theta_{h+2} / theta_1
  double psi(int h) const { return theta(h + 1) / theta(0); }
};

/// Minimum-distance estimate of theta with identity weighting on the
/// projected fourth-moment matrix. psi(T-1) is fixed at 0 since q is only
/// identified jointly with the psi(h) otherwise.
ThetaEstimate estimate_theta_md(const stats::FactorFit& fit);

struct NonparamEstimate {
  Matrix omega_bar;
  Warnings warnings;
};

NonparamEstimate estimate_omega_nonparam(const stats::FactorFit& fit);

struct SpacingLaws {
  SimulatedLaw spread;         // delta_1(Z*) - delta_{T-k}(Z*), limit of sqrt(n) S(k)
  std::optional<SimulatedLaw> ratio;  // limit of S*(k); absent when T-k < 3
  Matrix spacings;             // R x (T-k-1), draw order, delta_j - delta_{j+1}
};

/// Null laws of sqrt(n) S(k) and S*(k). q_hat is the T x (T-k) complement
/// basis (ignored for Nonparam). k_star defaults to T-2.
SpacingLaws simulate_law_S(const NullVarianceSpec& spec, int T, int k, const Matrix& q_hat, int R,
                           std::uint64_t seed, std::optional<int> k_star = std::nullopt);

/// Null law of n T(k) for InstrHomo / InstrGeneral specs.
SimulatedLaw simulate_law_T(const NullVarianceSpec& spec, int T, int k, int K, int R,
                            std::uint64_t seed);

InstrGeneral estimate_lambda_hat(const stats::InstrumentFit& iv,
                                 const stats::InstrumentPanel& instruments);

InstrHomo estimate_instr_homo(const stats::InstrumentFit& iv,
                              const stats::InstrumentPanel& instruments);

/// (1 + #{draws >= stat}) / (R + 1).
double pvalue(double stat_value, const SimulatedLaw& law);

struct SubsampleResult {
  double critical_value;
  Vector draws;  // Delta_k^b in subsample order
};

SubsampleResult subsample_critical_value(const stats::PanelData& panel, int k, int m, int B,
                                         double alpha, std::uint64_t seed);

}  // namespace shortpanel::nulldist
