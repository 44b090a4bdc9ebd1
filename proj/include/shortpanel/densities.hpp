#pragma once

#include <cstdint>
#include <vector>

#include "shortpanel/linalg.hpp"

namespace shortpanel::densities {

using linalg::Matrix;
using linalg::Vector;

/// Spacing of a 2 x 2 GOE matrix: (s/4) exp(-s^2/8).
double wigner_surmise_pdf(double s);
double wigner_surmise_cdf(double s);

/// Joint density of the two spacings of a 3 x 3 GOE matrix.
double goe3_joint_spacing_pdf(double s1, double s2);

/// Density of delta_1 - delta_3 for a 3 x 3 GOE matrix.
double goe3_total_spacing_pdf(double s);
double goe3_total_spacing_cdf(double s);

/// Density of (delta_1 - delta_2) / (delta_2 - delta_3) for a 3 x 3 GOE matrix.
double goe3_spacing_ratio_pdf(double r);
double goe3_spacing_ratio_cdf(double r);

enum class PowerStatistic { S, SStar };

struct PowerCurve {
  std::vector<double> grid;   // a = T c_{k+1} / sqrt(q)
  std::vector<double> power;
  int T_minus_k = 0;
  double alpha = 0.05;
  int R = 0;
};

/// Local power under Z1* = a e1 e1' + Z* with Z* in GOE(T-k), common random
/// numbers across the grid. k_star_minus_k defaults to T-k-2 for S*.
PowerCurve local_power_gaussian(int T_minus_k, double alpha, const std::vector<double>& a_grid, int R,
                                std::uint64_t seed, PowerStatistic statistic = PowerStatistic::S,
                                int k_star_minus_k = -1);

/// T-k = 2 with non-Gaussian errors: power of
/// (eta*/2) chi2(1, a^2 (1-2 phi)^2 / (2 eta*)) + chi2(1, a^2 phi (1-phi)).
PowerCurve local_power_nongaussian_T2(double eta_star, double phi, double alpha,
                                      const std::vector<double>& a_grid, int R, std::uint64_t seed);

struct T2Weights {
  double sigma11, sigma22, sigma12;
  double lambda1, lambda2;
  double d1, d2;
  double mu1, mu2;
};

/// Weights and non-centralities of the limit of (n / 4q) S(k)^2 for a
/// general T x 2 complement basis Q.
T2Weights general_T2_weights(const Matrix& q, double eta_star, double a);

}  // namespace shortpanel::densities
