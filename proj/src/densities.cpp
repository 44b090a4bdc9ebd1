#include "shortpanel/densities.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shortpanel/quadrature.hpp"
#include "shortpanel/random.hpp"
#include "shortpanel/stats.hpp"

namespace shortpanel::densities {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kUpper = 40.0;
constexpr double kTol = 1e-10;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void check_grid_args(double alpha, const std::vector<double>& grid, int r) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("local power: alpha must lie in (0,1)");
  if (grid.empty()) throw InvalidParameter("local power: empty a grid");
  if (r < 1) throw InvalidParameter("local power: R must be positive");
}

// (1-alpha) order statistic of the null draws, then exceedance frequencies.
PowerCurve finish_curve(std::vector<double> null_draws, const std::vector<std::vector<double>>& alt,
                        const std::vector<double>& grid, double alpha, int tmk) {
  std::sort(null_draws.begin(), null_draws.end());
  const auto r = null_draws.size();
  auto idx = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(r) - 1e-9));
  idx = std::clamp<std::size_t>(idx, 1, r);
  const double tau = null_draws[idx - 1];

  PowerCurve curve;
  curve.grid = grid;
  curve.T_minus_k = tmk;
  curve.alpha = alpha;
  curve.R = static_cast<int>(r);
  for (const auto& draws : alt) {
    const auto hits = std::count_if(draws.begin(), draws.end(), [tau](double x) { return x > tau; });
    curve.power.push_back(static_cast<double>(hits) / static_cast<double>(r));
  }
  return curve;
}

}  // namespace

double wigner_surmise_pdf(double s) {
  if (s < 0.0) return 0.0;
  return 0.25 * s * std::exp(-s * s / 8.0);
}

double wigner_surmise_cdf(double s) {
  if (s <= 0.0) return 0.0;
  return -std::expm1(-s * s / 8.0);
}

double goe3_joint_spacing_pdf(double s1, double s2) {
  if (s1 < 0.0 || s2 < 0.0) return 0.0;
  const double norm = 1.0 / (4.0 * std::sqrt(6.0 * kPi));
  return norm * std::exp(-(s1 * s1 + s2 * s2 + s1 * s2) / 6.0) * s1 * s2 * (s1 + s2);
}

double goe3_total_spacing_pdf(double s) {
  if (s < 0.0) return 0.0;
  const double erf_term = 2.0 * normal_cdf(s / (2.0 * std::sqrt(3.0))) - 1.0;
  const double bracket =
      erf_term * (s * s / 4.0 - 3.0) + 3.0 * s / std::sqrt(6.0 * kPi) * std::exp(-s * s / 24.0);
  return 0.25 * s * std::exp(-s * s / 8.0) * bracket;
}

double goe3_total_spacing_cdf(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= kUpper) return 1.0;
  return std::min(1.0, quadrature::adaptive_simpson(goe3_total_spacing_pdf, 0.0, s, kTol));
}

double goe3_spacing_ratio_pdf(double r) {
  if (r < 0.0) return 0.0;
  const double base = 1.0 + r + r * r;
  return 27.0 / 8.0 * (r + r * r) / std::pow(base, 2.5);
}

double goe3_spacing_ratio_cdf(double r) {
  if (r <= 0.0) return 0.0;
  // g3(1/u) / u^2 is the density of 1/r; r and 1/r have the same law, so
  // F(r) = 1 - F(1/r) and only [0, 1] needs quadrature.
  if (r > 1.0) return 1.0 - goe3_spacing_ratio_cdf(1.0 / r);
  return quadrature::adaptive_simpson(goe3_spacing_ratio_pdf, 0.0, r, kTol);
}

PowerCurve local_power_gaussian(int tmk, double alpha, const std::vector<double>& grid, int r,
                                std::uint64_t seed, PowerStatistic statistic, int k_star_minus_k) {
  check_grid_args(alpha, grid, r);
  if (tmk < 2) throw InvalidParameter("local_power_gaussian: T-k must be at least 2");
  int ratio_last = 0;
  if (statistic == PowerStatistic::SStar) {
    if (tmk < 3) throw InvalidParameter("local_power_gaussian: S* needs T-k >= 3");
    ratio_last = k_star_minus_k < 0 ? tmk - 2 : k_star_minus_k;
    if (ratio_last < 1 || ratio_last > tmk - 2)
      throw InvalidParameter("local_power_gaussian: need 1 <= k*-k <= T-k-2");
  }

  Rng rng = make_stream(seed);
  std::normal_distribution<double> normal;
  linalg::SpectrumWorkspace ws(tmk);
  std::vector<double> null_draws(static_cast<std::size_t>(r));
  std::vector<std::vector<double>> alt(grid.size(), std::vector<double>(static_cast<std::size_t>(r)));
  Matrix z(tmk, tmk);
  Matrix shifted(tmk, tmk);
  auto stat = [&](const Matrix& m) {
    const Vector& ev = ws.descending(m);
    return statistic == PowerStatistic::S ? ev(0) - ev(tmk - 1) : stats::max_spacing_ratio(ev, 1, ratio_last);
  };
  for (int i = 0; i < r; ++i) {
    for (int a = 0; a < tmk; ++a) {
      z(a, a) = std::sqrt(2.0) * normal(rng);
      for (int b = a + 1; b < tmk; ++b) z(a, b) = z(b, a) = normal(rng);
    }
    null_draws[static_cast<std::size_t>(i)] = stat(z);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      shifted = z;
      shifted(0, 0) += grid[g];
      alt[g][static_cast<std::size_t>(i)] = stat(shifted);
    }
  }
  return finish_curve(std::move(null_draws), alt, grid, alpha, tmk);
}

PowerCurve local_power_nongaussian_T2(double eta_star, double phi, double alpha,
                                      const std::vector<double>& grid, int r, std::uint64_t seed) {
  check_grid_args(alpha, grid, r);
  if (!(eta_star > 0.0)) throw InvalidParameter("local_power_nongaussian_T2: eta* must be positive");
  if (!(phi >= 0.0 && phi <= 1.0)) throw InvalidParameter("local_power_nongaussian_T2: phi must lie in [0,1]");

  Rng rng = make_stream(seed);
  std::normal_distribution<double> normal;
  const double w1 = 0.5 * eta_star;
  const double shift1 = (1.0 - 2.0 * phi) / std::sqrt(2.0 * eta_star);
  const double shift2 = std::sqrt(phi * (1.0 - phi));
  std::vector<double> null_draws(static_cast<std::size_t>(r));
  std::vector<std::vector<double>> alt(grid.size(), std::vector<double>(static_cast<std::size_t>(r)));
  for (int i = 0; i < r; ++i) {
    const double x1 = normal(rng);
    const double x2 = normal(rng);
    null_draws[static_cast<std::size_t>(i)] = w1 * x1 * x1 + x2 * x2;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double u1 = x1 + grid[g] * shift1;
      const double u2 = x2 + grid[g] * shift2;
      alt[g][static_cast<std::size_t>(i)] = w1 * u1 * u1 + u2 * u2;
    }
  }
  return finish_curve(std::move(null_draws), alt, grid, alpha, 2);
}

T2Weights general_T2_weights(const Matrix& q, double eta_star, double a) {
  if (q.cols() != 2 || q.rows() < 2) throw InvalidInput("general_T2_weights: Q must be T x 2");
  if ((q.transpose() * q - Matrix::Identity(2, 2)).norm() > 1e-8)
    throw InvalidInput("general_T2_weights: Q must have orthonormal columns");
  if (!(eta_star > 0.0)) throw InvalidParameter("general_T2_weights: eta* must be positive");

  T2Weights w{};
  const auto q1 = q.col(0).array();
  const auto q2 = q.col(1).array();
  const Eigen::ArrayXd diff = q1.square() - q2.square();
  w.sigma11 = 0.25 * diff.square().sum();
  w.sigma22 = (q1.square() * q2.square()).sum();
  w.sigma12 = 0.5 * (diff * q1 * q2).sum();

  const double root = std::sqrt((w.sigma11 - w.sigma22) * (w.sigma11 - w.sigma22) + 4.0 * w.sigma12 * w.sigma12);
  w.lambda1 = 0.5 * (w.sigma11 + w.sigma22 + root);
  w.lambda2 = w.lambda1 - root;
  w.d1 = 1.0 + (eta_star - 2.0) * w.lambda1;
  w.d2 = 1.0 + (eta_star - 2.0) * w.lambda2;

  // squared first coordinate of the lambda1 eigenvector (sigma12, lambda1 - sigma11)
  const double num = w.sigma12 * w.sigma12;
  const double den = num + (w.lambda1 - w.sigma11) * (w.lambda1 - w.sigma11);
  const double share = den > 1e-300 ? num / den : (w.sigma11 >= w.sigma22 ? 1.0 : 0.0);
  w.mu1 = a * a / (4.0 * w.d1) * share;
  w.mu2 = a * a / (4.0 * w.d2) * (1.0 - share);
  return w;
}

}  // namespace shortpanel::densities
