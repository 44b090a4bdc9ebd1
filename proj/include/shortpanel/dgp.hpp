#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "shortpanel/random.hpp"
#include "shortpanel/stats.hpp"

namespace shortpanel::dgp {

using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

/// Strong factors: beta_i ~ N(0, I_k), f_t ~ N(0, I_k).
struct Dgp1 {
  int n = 1000;
  int T = 12;
  int k = 3;
};

/// Three factors, Sigma_beta = diag(1, 1, c n^-kappa), normalized factor path.
struct Dgp2 {
  int n = 1000;
  int T = 6;
  double kappa = 0.0;
  double c = 1.0;
};

/// Dgp2 loadings with ARCH(1) errors, alpha_i ~ U[arch_l, arch_u].
struct Dgp3 {
  int n = 1000;
  int T = 12;
  double kappa = 0.0;
  double c = 1.0;
  double arch_l = 0.1;
  double arch_u = 0.4;
  int burn_in = 50;
};

/// Loadings driven by instruments: beta_i = Gamma' z_i + u_i.
struct Dgp4 {
  int n = 1000;
  int T = 6;
  int k = 3;
  int K = 10;
};

using DgpModel = std::variant<Dgp1, Dgp2, Dgp3, Dgp4>;

struct DgpConfig {
  DgpModel model;
  double sigma2_low = 1.0;
  double sigma2_high = 4.0;
  std::uint64_t seed = 0;

  int n() const;
  int T() const;
  int k() const;
  /// 1-based DGP number.
  int index() const { return static_cast<int>(model.index()) + 1; }
  void validate() const;
};

/// Quantities held fixed across Monte Carlo repetitions: factor path,
/// loadings, error variances, ARCH coefficients, and (DGP4) Gamma.
struct DgpDesign {
  DgpConfig config;
  Matrix F;        // T x k
  Matrix beta;     // n x k (empty for DGP4, where loadings follow the instruments)
  Vector sigma2;   // n
  Vector alpha;    // n, DGP3 only
  Matrix Gamma;    // K x k, DGP4 only
};

struct DgpDraw {
  stats::PanelData panel;
  std::optional<stats::InstrumentPanel> instruments;
  Matrix F_true;
  Matrix beta_true;
  Vector sigma2_true;
};

/// i.i.d. N(0,1) entries; DGP2/DGP3 paths are rescaled so F'F/T = I_k.
Matrix draw_factor_path(const DgpConfig& config, Rng& rng);

/// Draws the fixed part of the design; F_fixed replaces the factor draw.
DgpDesign draw_design(const DgpConfig& config, Rng& rng, const std::optional<Matrix>& F_fixed = std::nullopt);

/// One repetition: errors (and DGP4 instruments and loading noise) are redrawn.
DgpDraw generate(const DgpDesign& design, Rng& rng);

/// Fresh design and one repetition in a single call.
DgpDraw generate(const DgpConfig& config, const std::optional<Matrix>& F_fixed, Rng& rng);

/// E[alpha^h / (1 - 3 alpha^2)] for alpha ~ U[l, u].
double psi_moment(int h, double l, double u);

}  // namespace shortpanel::dgp
