#include "shortpanel/dgp.hpp"

#include <cmath>
#include <string>
#include <type_traits>

#include "shortpanel/quadrature.hpp"

namespace shortpanel::dgp {

namespace {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  // row-major fill keeps the draw order independent of Eigen's storage
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Vector uniform_vector(Eigen::Index size, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = unif(rng);
  return v;
}

// n x T errors with standard deviation sqrt(sigma2_i) per row.
Matrix gaussian_errors(const Vector& sigma2, int t, Rng& rng) {
  Matrix e = normal_matrix(sigma2.size(), t, rng);
  return sigma2.cwiseSqrt().asDiagonal() * e;
}

Matrix arch_errors(const Vector& sigma2, const Vector& alpha, int t, int burn_in, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix e(sigma2.size(), t);
  for (Eigen::Index i = 0; i < sigma2.size(); ++i) {
    const double c = sigma2(i) * (1.0 - alpha(i));
    double prev = std::sqrt(sigma2(i)) * normal(rng);
    for (int s = 0; s < burn_in; ++s) prev = std::sqrt(c + alpha(i) * prev * prev) * normal(rng);
    for (int s = 0; s < t; ++s) {
      prev = std::sqrt(c + alpha(i) * prev * prev) * normal(rng);
      e(i, s) = prev;
    }
  }
  return e;
}

}  // namespace

int DgpConfig::n() const {
  return std::visit([](const auto& m) { return m.n; }, model);
}

int DgpConfig::T() const {
  return std::visit([](const auto& m) { return m.T; }, model);
}

int DgpConfig::k() const {
  return std::visit(
      [](const auto& m) {
        if constexpr (requires { m.k; })
          return m.k;
        else
          return 3;
      },
      model);
}

void DgpConfig::validate() const {
  if (n() < 2) throw InvalidInput("DgpConfig: n must be at least 2");
  if (T() < 2) throw InvalidInput("DgpConfig: T must be at least 2");
  if (k() < 1 || k() > T()) throw InvalidInput("DgpConfig: need 1 <= k <= T");
  if (!(sigma2_low > 0.0) || !(sigma2_high >= sigma2_low))
    throw InvalidInput("DgpConfig: need 0 < sigma2_low <= sigma2_high");
  auto check_loading = [](double kappa, double c) {
    if (!(kappa >= 0.0)) throw InvalidInput("DgpConfig: kappa must be non-negative");
    if (!(c > 0.0)) throw InvalidInput("DgpConfig: c must be positive");
  };
  if (const auto* d2 = std::get_if<Dgp2>(&model)) check_loading(d2->kappa, d2->c);
  if (const auto* d3 = std::get_if<Dgp3>(&model)) {
    check_loading(d3->kappa, d3->c);
    if (!(d3->arch_l >= 0.0 && d3->arch_l <= d3->arch_u))
      throw InvalidInput("DgpConfig: need 0 <= arch_l <= arch_u");
    if (!(3.0 * d3->arch_u * d3->arch_u < 1.0))
      throw InvalidInput("DgpConfig: arch_u^2 must be below 1/3 for finite fourth moments");
    if (d3->burn_in < 0) throw InvalidInput("DgpConfig: burn_in must be non-negative");
  }
  if (const auto* d4 = std::get_if<Dgp4>(&model))
    if (d4->K < d4->k) throw InvalidInput("DgpConfig: DGP4 needs K >= k");
}

Matrix draw_factor_path(const DgpConfig& config, Rng& rng) {
  const int t = config.T();
  const int k = config.k();
  if (t < k) throw InvalidInput("draw_factor_path: T < k");
  Matrix f = normal_matrix(t, k, rng);
  if (std::holds_alternative<Dgp2>(config.model) || std::holds_alternative<Dgp3>(config.model))
    f = std::sqrt(static_cast<double>(t)) * linalg::orthonormal_range(f);
  return f;
}

DgpDesign draw_design(const DgpConfig& config, Rng& rng, const std::optional<Matrix>& F_fixed) {
  config.validate();
  const int n = config.n();
  const int k = config.k();
  DgpDesign d;
  d.config = config;
  if (F_fixed) {
    if (F_fixed->rows() != config.T() || F_fixed->cols() != k)
      throw InvalidInput("draw_design: fixed factor path must be T x k");
    d.F = *F_fixed;
  } else {
    d.F = draw_factor_path(config, rng);
  }
  d.sigma2 = uniform_vector(n, config.sigma2_low, config.sigma2_high, rng);

  auto weak_loadings = [&](double kappa, double c) {
    Matrix b = normal_matrix(n, k, rng);
    b.col(k - 1) *= std::sqrt(c * std::pow(static_cast<double>(n), -kappa));
    return b;
  };
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Dgp1>) {
          d.beta = normal_matrix(n, k, rng);
        } else if constexpr (std::is_same_v<M, Dgp2>) {
          d.beta = weak_loadings(m.kappa, m.c);
        } else if constexpr (std::is_same_v<M, Dgp3>) {
          d.beta = weak_loadings(m.kappa, m.c);
          d.alpha = uniform_vector(n, m.arch_l, m.arch_u, rng);
        } else {
          // Gamma: eigenvectors of G G' for its k non-zero eigenvalues
          const Matrix g = normal_matrix(m.K, m.k, rng);
          const linalg::SymEig eig = linalg::sym_eig(SymMatrix(g * g.transpose()));
          d.Gamma = eig.vectors.leftCols(m.k);
        }
      },
      config.model);
  return d;
}

DgpDraw generate(const DgpDesign& d, Rng& rng) {
  const int t = d.config.T();
  Matrix beta = d.beta;
  std::optional<stats::InstrumentPanel> instruments;
  if (const auto* d4 = std::get_if<Dgp4>(&d.config.model)) {
    Matrix z = normal_matrix(d4->n, d4->K, rng);
    beta = z * d.Gamma + normal_matrix(d4->n, d4->k, rng);
    instruments.emplace(std::move(z));
  }
  Matrix e;
  if (const auto* d3 = std::get_if<Dgp3>(&d.config.model))
    e = arch_errors(d.sigma2, d.alpha, t, d3->burn_in, rng);
  else
    e = gaussian_errors(d.sigma2, t, rng);

  Matrix y = beta * d.F.transpose() + e;
  return DgpDraw{stats::PanelData(std::move(y)), std::move(instruments), d.F, std::move(beta), d.sigma2};
}

DgpDraw generate(const DgpConfig& config, const std::optional<Matrix>& F_fixed, Rng& rng) {
  return generate(draw_design(config, rng, F_fixed), rng);
}

double psi_moment(int h, double l, double u) {
  if (h < 0) throw InvalidParameter("psi_moment: h must be non-negative");
  if (!(l >= 0.0 && l < u)) throw InvalidParameter("psi_moment: need 0 <= l < u");
  if (!(3.0 * u * u < 1.0)) throw InvalidParameter("psi_moment: need u^2 < 1/3");
  auto f = [h](double a) { return std::pow(a, h) / (1.0 - 3.0 * a * a); };
  return quadrature::adaptive_simpson(f, l, u, 1e-12 * (u - l) + 1e-14, 8) / (u - l);
}

}  // namespace shortpanel::dgp
