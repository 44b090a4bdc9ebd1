#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shortpanel/dgp.hpp"
#include "shortpanel/nulldist.hpp"

using namespace shortpanel;
using namespace shortpanel::nulldist;
using stats::FactorFit;
using stats::PanelData;

namespace {

Matrix random_normal(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Reference densities, written out independently of the library.
double f2_ref(double s) { return s < 0 ? 0.0 : s / 4 * std::exp(-s * s / 8); }

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double f3_ref(double s) {
  if (s < 0) return 0.0;
  const double pi = std::acos(-1.0);
  return s / 4 * std::exp(-s * s / 8) *
         ((2 * phi_cdf(s / (2 * std::sqrt(3.0))) - 1) * (s * s / 4 - 3) +
          3 * s / std::sqrt(6 * pi) * std::exp(-s * s / 24));
}

double g3_ref(double r) {
  if (r < 0) return 0.0;
  return 27.0 / 8.0 * (r + r * r) / std::pow(1 + r + r * r, 2.5);
}

// F(r) for g3 using F(r) = 1 - F(1/r), so quadrature only runs over [0, 1].
double g3_cdf_ref(double r) {
  if (r <= 0) return 0.0;
  if (r <= 1) return oracle::integrate(g3_ref, 0.0, r);
  return 1.0 - oracle::integrate(g3_ref, 0.0, 1.0 / r);
}

FactorFit fit_with_residuals(const Matrix& eps, int k) {
  FactorFit fit;
  fit.k = k;
  fit.residuals = eps;
  const int t = static_cast<int>(eps.cols());
  fit.M_Fhat = Matrix::Identity(t, t);
  fit.Q_hat = Matrix::Identity(t, t);
  fit.F_hat = Matrix(t, 0);
  return fit;
}

// Residuals from heteroskedastic Gaussian errors with sigma_i^2 ~ U[1,4] and k PCA factors.
FactorFit gaussian_fit(int n, int t, int k, std::mt19937_64& rng, bool hetero) {
  std::uniform_real_distribution<double> u(1.0, 4.0);
  Matrix eps = random_normal(n, t, rng);
  if (hetero)
    for (int i = 0; i < n; ++i) eps.row(i) *= std::sqrt(u(rng));
  const Matrix f = random_normal(t, k, rng);
  const Matrix b = random_normal(n, k, rng);
  return stats::pca_fit(PanelData(b * f.transpose() + eps), k);
}

// Covariance of vec(Q'ZQ - tr(Q'ZQ)/m I) when vec(Z) has covariance omega.
Matrix projected_centered_cov(const Matrix& omega, const Matrix& q) {
  const Eigen::Index m = q.cols();
  const Matrix qq = linalg::kron(q, q);
  const Vector vi = linalg::vec(Matrix::Identity(m, m));
  const Matrix c = Matrix::Identity(m * m, m * m) - vi * vi.transpose() / static_cast<double>(m);
  return c * qq.transpose() * omega * qq * c;
}

}  // namespace

TEST_CASE("estimate_sigma2") {
  CHECK(estimate_sigma2(fit_with_residuals(Matrix::Ones(2, 3), 1)) == doctest::Approx(1.5));
  CHECK(estimate_sigma2(fit_with_residuals(Matrix::Zero(4, 3), 1)) == 0.0);
  std::mt19937_64 rng(1);
  const FactorFit fit = gaussian_fit(20000, 6, 2, rng, false);
  CHECK(estimate_sigma2(fit) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("estimate_eta_q") {
  std::mt19937_64 rng(2);
  SUBCASE("coefficients with M = I") {
    const int t = 5;
    const FactorFit fit = stats::pca_fit(PanelData(random_normal(30, t, rng)), 0);
    const EtaQEstimate e = estimate_eta_q(fit);
    CHECK(e.a == doctest::Approx(t));
    CHECK(e.b == doctest::Approx(t * t));
    CHECK(e.c == doctest::Approx(t));
    CHECK(e.d == doctest::Approx(t));
    // direct summation of the two moments
    double m1 = 0, m2 = 0;
    for (int i = 0; i < 30; ++i) {
      const double s = fit.residuals.row(i).squaredNorm();
      m1 += s * s;
      m2 += fit.residuals.row(i).array().pow(4).sum();
    }
    m1 /= 30;
    m2 /= 30;
    CHECK(e.a * e.eta + e.b * e.q == doctest::Approx(m1).epsilon(1e-10));
    CHECK(e.c * e.eta + e.d * e.q == doctest::Approx(m2).epsilon(1e-10));
  }
  SUBCASE("iid Gaussian errors, k = 0") {
    const EtaQEstimate e = estimate_eta_q(stats::pca_fit(PanelData(random_normal(50000, 5, rng)), 0));
    CHECK(e.eta == doctest::Approx(2.0).epsilon(0.05));
    CHECK(e.q == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("Gaussian errors give eta / q near 2") {
    const EtaQEstimate e = estimate_eta_q(gaussian_fit(50000, 8, 2, rng, true));
    CHECK(e.eta / e.q == doctest::Approx(2.0).epsilon(0.1));
    CHECK(e.q == doctest::Approx(7.0).epsilon(0.1));
  }
  SUBCASE("deterministic unit residuals exercise the arithmetic") {
    const FactorFit fit = fit_with_residuals(Matrix::Ones(10, 4), 0);
    const EtaQEstimate e = estimate_eta_q(fit);
    CHECK(e.a * e.eta + e.b * e.q == doctest::Approx(16.0));
    CHECK(e.c * e.eta + e.d * e.q == doctest::Approx(4.0));
  }
}

TEST_CASE("simulate_Z_indep moments") {
  Rng rng = make_stream(3);
  const int t = 4, draws = 100000;
  const double eta = 3.0, q = 0.7;
  double sd = 0, so = 0, cross = 0;
  for (int r = 0; r < draws; ++r) {
    const SymMatrix z = simulate_Z_indep(t, eta, q, rng);
    CHECK_FALSE((z.matrix() - z.matrix().transpose()).norm() > 0);
    sd += z(1, 1) * z(1, 1);
    so += z(0, 2) * z(0, 2);
    cross += z(0, 0) * z(1, 1);
  }
  CHECK(sd / draws == doctest::Approx(eta).epsilon(0.03));
  CHECK(so / draws == doctest::Approx(q).epsilon(0.03));
  CHECK(std::abs(cross / draws) < 0.1);
}

TEST_CASE("build_omega_arch") {
  const int t = 4;
  auto idx = [&](int r, int c) { return r + t * c; };
  SUBCASE("nests the independent-errors model") {
    const double q = 1.3, eta = 3.1;
    Vector theta = Vector::Zero(t + 1);
    theta(0) = q;
    theta(1) = eta / 2;
    const Matrix om = build_omega_arch(theta);
    Matrix ref = Matrix::Zero(t * t, t * t);
    for (int a = 0; a < t; ++a)
      for (int b = 0; b < t; ++b) {
        const double v = a == b ? eta : q;
        ref(idx(a, b), idx(a, b)) = v;
        ref(idx(a, b), idx(b, a)) = v;
      }
    CHECK((om - ref).norm() < 1e-14);
  }
  SUBCASE("general theta entries") {
    Vector theta(t + 1);
    theta << 2.0, 1.5, 0.3, 0.2, 0.1;
    const Matrix om = build_omega_arch(theta);
    CHECK(om(idx(1, 1), idx(1, 1)) == doctest::Approx(2 * 1.5));
    CHECK(om(idx(0, 0), idx(2, 2)) == doctest::Approx(2 * 0.2));
    CHECK(om(idx(0, 2), idx(0, 2)) == doctest::Approx(2.0 + 2 * 0.2));
    CHECK(om(idx(0, 2), idx(2, 0)) == doctest::Approx(2.0 + 2 * 0.2));
    CHECK(om(idx(0, 1), idx(0, 2)) == 0.0);
    CHECK(om(idx(0, 1), idx(2, 3)) == 0.0);
    CHECK((om - om.transpose()).norm() == 0.0);
  }
  SUBCASE("invalid parameters") {
    Vector theta = Vector::Zero(t + 1);
    theta(0) = 1.0;
    CHECK_THROWS_AS(build_omega_arch(theta), InvalidParameter);
  }
  SUBCASE("ARCH psi moment against quadrature") {
    const double l = 0.1, u = 0.4;
    for (int h = 0; h < 4; ++h) {
      const double ref =
          oracle::integrate([h](double a) { return std::pow(a, h) / (1 - 3 * a * a); }, l, u) / (u - l);
      CHECK(dgp::psi_moment(h, l, u) == doctest::Approx(ref).epsilon(1e-9));
    }
  }
}

TEST_CASE("estimate_theta_md on Gaussian heteroskedastic errors") {
  std::mt19937_64 rng(4);
  const ThetaEstimate th = estimate_theta_md(gaussian_fit(50000, 6, 1, rng, true));
  CHECK(th.theta.size() == 7);
  CHECK(th.q() == doctest::Approx(7.0).epsilon(0.1));
  CHECK(th.psi(0) == doctest::Approx(1.0).epsilon(0.1));
  for (int h = 1; h < 6; ++h) CHECK(std::abs(th.psi(h)) < 0.1);
  CHECK(th.psi(5) == 0.0);
  CHECK(th.warnings.empty());
  // projected covariance PSD up to clipping tolerance
  const FactorFit fit = gaussian_fit(2000, 6, 1, rng, false);
  const ThetaEstimate th2 = estimate_theta_md(fit);
  const Matrix qq = linalg::kron(fit.Q_hat, fit.Q_hat);
  const Vector ev = oracle::eigvals_ld(qq.transpose() * build_omega_arch(th2.theta) * qq);
  CHECK(ev.minCoeff() >= -1e-8 * ev.maxCoeff());
}

TEST_CASE("estimate_theta_md keeps Omega PSD on non-ARCH residuals") {
  std::mt19937_64 rng(41);
  int shrunk = 0;
  for (int rep = 0; rep < 20; ++rep) {
    // small n, period-specific scales and a common volatility shock
    Matrix eps = random_normal(150, 8, rng);
    for (int t = 0; t < 8; ++t) eps.col(t) *= (t % 2 == 0 ? 3.0 : 0.3);
    for (int i = 0; i < 150; ++i) eps.row(i) *= std::exp(0.8 * random_normal(1, 1, rng)(0, 0));
    const ThetaEstimate th = estimate_theta_md(fit_with_residuals(eps, 0));
    for (const auto& w : th.warnings) shrunk += w.find("shrunk") != std::string::npos;
    const Vector ev = oracle::eigvals_ld(build_omega_arch(th.theta));
    CHECK(ev.minCoeff() >= -1e-10 * ev.maxCoeff());
  }
  MESSAGE("lag shrinkage applied in " << shrunk << " of 20 panels");
}

TEST_CASE("estimate_theta_md order condition") {
  std::mt19937_64 rng(5);
  // m = 1 allows a single moment, far fewer than T + 1 parameters
  const FactorFit fit = gaussian_fit(200, 4, 3, rng, false);
  CHECK_THROWS_AS(estimate_theta_md(fit), IdentificationFailure);
}

TEST_CASE("estimate_omega_nonparam") {
  std::mt19937_64 rng(6);
  const NonparamEstimate zero = estimate_omega_nonparam(fit_with_residuals(Matrix::Zero(50, 4), 0));
  CHECK(zero.omega_bar.norm() == 0.0);

  const FactorFit fit = gaussian_fit(3000, 6, 2, rng, false);
  const Matrix ob = estimate_omega_nonparam(fit).omega_bar;
  const int m = 4;
  CHECK(ob.rows() == m * m);
  const Vector vi = linalg::vec(Matrix::Identity(m, m));
  CHECK(std::abs(vi.dot(ob * vi)) < 1e-10 * ob.norm());
  CHECK(oracle::eigvals_ld(ob).minCoeff() > -1e-10);

  // Gaussian spherical errors: covariance of the centred projected GOE matrix
  const FactorFit big = gaussian_fit(50000, 5, 1, rng, false);
  Vector theta = Vector::Zero(6);
  theta(0) = 1.0;
  theta(1) = 1.0;
  const Matrix ref = projected_centered_cov(build_omega_arch(theta), big.Q_hat);
  const Matrix est = estimate_omega_nonparam(big).omega_bar;
  CHECK((est - ref).norm() / ref.norm() < 0.05);
}

TEST_CASE("GOE spacing laws against closed forms") {
  std::mt19937_64 rng(7);
  SUBCASE("T - k = 2: Wigner surmise") {
    const int t = 4, k = 2;
    const Matrix q = linalg::complement_basis(linalg::orthonormal_range(random_normal(t, k, rng)));
    const SpacingLaws laws = simulate_law_S(IndepErrors{2.0, 1.0}, t, k, q, 100000, 11);
    CHECK_FALSE(laws.ratio.has_value());
    CHECK(oracle::ks_statistic_from_pdf(to_std(laws.spread.draws), f2_ref) < 0.02);
    // scaled by sqrt(q)
    const SpacingLaws scaled = simulate_law_S(IndepErrors{8.0, 4.0}, t, k, q, 100000, 12);
    CHECK(oracle::ks_statistic_from_pdf(to_std(scaled.spread.draws), [](double s) { return f2_ref(s / 2) / 2; }) <
          0.02);
  }
  SUBCASE("T - k = 3: total spacing and spacing ratio") {
    const int t = 5, k = 2;
    const Matrix q = linalg::complement_basis(linalg::orthonormal_range(random_normal(t, k, rng)));
    const SpacingLaws laws = simulate_law_S(IndepErrors{2.0, 1.0}, t, k, q, 100000, 13);
    REQUIRE(laws.ratio.has_value());
    CHECK(oracle::ks_statistic_from_pdf(to_std(laws.spread.draws), f3_ref) < 0.02);
    CHECK(oracle::ks_statistic(to_std(laws.ratio->draws), g3_cdf_ref) < 0.02);
    CHECK(laws.spacings.rows() == 100000);
    CHECK(laws.spacings.cols() == 2);
  }
}

TEST_CASE("simulate_law_S: reproducibility, rotation and variance models") {
  std::mt19937_64 rng(8);
  const int t = 6, k = 2;
  const Matrix q1 = linalg::complement_basis(linalg::orthonormal_range(random_normal(t, k, rng)));
  const Matrix q2 = linalg::complement_basis(linalg::orthonormal_range(random_normal(t, k, rng)));

  const SpacingLaws a = simulate_law_S(IndepErrors{2.0, 1.0}, t, k, q1, 2000, 21);
  const SpacingLaws b = simulate_law_S(IndepErrors{2.0, 1.0}, t, k, q1, 2000, 21);
  CHECK((a.spread.draws - b.spread.draws).norm() == 0.0);
  CHECK((a.ratio->draws - b.ratio->draws).norm() == 0.0);
  CHECK(a.spread.draws.size() == 2000);
  for (Eigen::Index i = 1; i < a.spread.R(); ++i) CHECK_FALSE(a.spread.draws(i) < a.spread.draws(i - 1));

  const SpacingLaws r1 = simulate_law_S(IndepErrors{2.0, 1.0}, t, k, q1, 50000, 22);
  const SpacingLaws r2 = simulate_law_S(IndepErrors{2.0, 1.0}, t, k, q2, 50000, 23);
  const double d = oracle::ks_two_sample(to_std(r1.spread.draws), to_std(r2.spread.draws));
  CHECK(oracle::kolmogorov_pvalue(d, 25000.0) > 0.01);

  // ARCH model with GOE parameters and Nonparam with the matching covariance
  // give the same law as the independent-errors sampler.
  Vector theta = Vector::Zero(t + 1);
  theta(0) = 1.0;
  theta(1) = 1.0;
  const SpacingLaws arch = simulate_law_S(ArchParam{theta}, t, k, q1, 50000, 24);
  const double d_arch = oracle::ks_two_sample(to_std(r1.spread.draws), to_std(arch.spread.draws));
  CHECK(oracle::kolmogorov_pvalue(d_arch, 25000.0) > 0.01);
  const Matrix ob = projected_centered_cov(build_omega_arch(theta), q1);
  const SpacingLaws np = simulate_law_S(Nonparam{ob}, t, k, q1, 50000, 25);
  const double d_np = oracle::ks_two_sample(to_std(r1.spread.draws), to_std(np.spread.draws));
  CHECK(oracle::kolmogorov_pvalue(d_np, 25000.0) > 0.01);
  const double d_ratio = oracle::ks_two_sample(to_std(r1.ratio->draws), to_std(np.ratio->draws));
  CHECK(oracle::kolmogorov_pvalue(d_ratio, 25000.0) > 0.01);

  CHECK_THROWS_AS(simulate_law_S(InstrHomo{1.0, Vector::Ones(2)}, t, k, q1, 100, 1), Error);
  Matrix bad = -Matrix::Identity(16, 16);
  CHECK_THROWS_AS(simulate_law_S(Nonparam{bad}, t, k, q1, 100, 1), SimulationFailure);
  CHECK_FALSE(simulate_law_S(IndepErrors{2.0, 1.0}, t, k, q1, 100, 1).spread.warnings.empty());
}

TEST_CASE("spacing statistics of simulated matrices are shift invariant") {
  Rng rng = make_stream(9);
  const int t = 7;
  std::mt19937_64 g(9);
  const Matrix q = linalg::complement_basis(linalg::orthonormal_range(random_normal(t, 2, g)));
  for (int r = 0; r < 200; ++r) {
    const Matrix zs = q.transpose() * simulate_Z_indep(t, 2.0, 1.0, rng).matrix() * q;
    const double c = 0.5 + r * 0.01;
    const Vector e1 = linalg::sym_eigvals(SymMatrix(zs));
    const Vector e2 = linalg::sym_eigvals(SymMatrix(zs + c * Matrix::Identity(5, 5)));
    CHECK(std::abs((e1(0) - e1(4)) - (e2(0) - e2(4))) < 1e-10);
    const double r1 = stats::max_spacing_ratio(e1, 1, 3), r2 = stats::max_spacing_ratio(e2, 1, 3);
    CHECK(std::abs(r1 - r2) < 1e-8 * std::max(1.0, r1));
  }
}

TEST_CASE("simulate_law_T") {
  SUBCASE("single weight: mean of chi2(2) / T") {
    const SimulatedLaw law = simulate_law_T(InstrHomo{1.0, Vector::Ones(1)}, 3, 1, 2, 100000, 31);
    CHECK(law.draws.mean() == doctest::Approx(2.0 / 3.0).epsilon(0.02));
  }
  SUBCASE("zero weights") {
    const SimulatedLaw law = simulate_law_T(InstrHomo{1.0, Vector::Zero(3)}, 5, 1, 4, 1000, 32);
    CHECK(law.draws.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("identity Lambda") {
    const int t = 6, k = 2, kk = 4, d = (t - k) * (kk - k);
    const SimulatedLaw law = simulate_law_T(InstrGeneral{Vector::Ones(d)}, t, k, kk, 100000, 33);
    CHECK(law.draws.mean() == doctest::Approx(static_cast<double>(d) / t).epsilon(0.02));
  }
  SUBCASE("chi2 quantile of a single weight") {
    // (1/T) chi2(T-k): 95% quantile of chi2(4) is 9.487729
    const SimulatedLaw law = simulate_law_T(InstrHomo{1.0, Vector::Ones(1)}, 5, 1, 2, 100000, 34);
    CHECK(law.quantile(0.95) == doctest::Approx(9.487729 / 5).epsilon(0.02));
  }
  SUBCASE("reproducible") {
    const auto a = simulate_law_T(InstrHomo{1.0, Vector::Ones(2)}, 5, 1, 3, 500, 35);
    const auto b = simulate_law_T(InstrHomo{1.0, Vector::Ones(2)}, 5, 1, 3, 500, 35);
    CHECK((a.draws - b.draws).norm() == 0.0);
  }
  SUBCASE("wrong spec") {
    CHECK_THROWS_AS(simulate_law_T(IndepErrors{2.0, 1.0}, 5, 1, 3, 100, 1), Error);
  }
}

TEST_CASE("instrument variance estimators") {
  std::mt19937_64 rng(10);
  const int t = 5, kk = 4, k = 2;
  auto make = [&](int n, bool zero_noise) {
    Matrix z = random_normal(n, kk, rng);
    for (int j = 0; j < kk; ++j) z.col(j) *= std::sqrt(1.0 + j);
    const Matrix f = random_normal(t, k, rng);
    const Matrix gamma = random_normal(kk, k, rng);
    Matrix y = z * gamma * f.transpose();
    if (!zero_noise) y += random_normal(n, t, rng);
    return std::make_pair(PanelData(y), stats::InstrumentPanel(z));
  };

  SUBCASE("zero residuals") {
    const auto [p, z] = make(200, true);
    const auto fit = stats::iv_fit(p, z, k);
    const InstrGeneral g = estimate_lambda_hat(fit, z);
    CHECK(g.lambda.size() == (t - k) * (kk - k));
    CHECK(g.lambda.cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("homoskedastic data: Lambda spectrum and cross-method quantiles") {
    const auto [p, z] = make(50000, false);
    const auto fit = stats::iv_fit(p, z, k);
    const InstrGeneral g = estimate_lambda_hat(fit, z);
    const InstrHomo h = estimate_instr_homo(fit, z);
    CHECK(h.sigma2 == doctest::Approx(1.0).epsilon(0.03));
    REQUIRE(h.weights.size() == kk - k);
    // each homoskedastic weight appears with multiplicity T - k
    std::vector<double> expect;
    for (int j = 0; j < kk - k; ++j)
      for (int r = 0; r < t - k; ++r) expect.push_back(h.weights(j));
    std::sort(expect.rbegin(), expect.rend());
    REQUIRE(static_cast<std::size_t>(g.lambda.size()) == expect.size());
    for (std::size_t j = 0; j < expect.size(); ++j)
      CHECK(g.lambda(static_cast<Eigen::Index>(j)) == doctest::Approx(expect[j]).epsilon(0.1));
    const double qh = simulate_law_T(h, t, k, kk, 20000, 41).quantile(0.95);
    const double qg = simulate_law_T(g, t, k, kk, 20000, 42).quantile(0.95);
    CHECK(qh == doctest::Approx(qg).epsilon(0.05));
  }
  SUBCASE("orthonormal instruments give equal weights") {
    const int n = 400;
    const Matrix z = linalg::orthonormal_range(random_normal(n, kk, rng)) * std::sqrt(static_cast<double>(n));
    const Matrix y = random_normal(n, t, rng);
    const stats::InstrumentPanel zp(z);
    const auto fit = stats::iv_fit(PanelData(y), zp, k);
    const InstrHomo h = estimate_instr_homo(fit, zp);
    CHECK(h.sigma2 == doctest::Approx(estimate_sigma2(fit.factor_fit)));
    for (Eigen::Index j = 0; j < h.weights.size(); ++j) CHECK(h.weights(j) == doctest::Approx(h.sigma2));
  }
}

TEST_CASE("pvalue and quantile") {
  SimulatedLaw law;
  law.draws = Vector::LinSpaced(99, 1.0, 99.0);
  CHECK(pvalue(0.5, law) == doctest::Approx(1.0));  // (1 + 99) / 100
  CHECK(pvalue(100.0, law) == doctest::Approx(0.01));
  CHECK(pvalue(50.0, law) == doctest::Approx(0.51));
  double prev = 1.0;
  for (double s = 0; s < 101; s += 0.5) {
    const double p = pvalue(s, law);
    CHECK(p <= prev);
    CHECK(p > 0.0);
    prev = p;
  }
  CHECK(law.quantile(0.95) == 95.0);
  CHECK(law.quantile(1.0) == 99.0);
  CHECK(law.quantile(0.001) == 1.0);
}

TEST_CASE("subsample_critical_value") {
  std::mt19937_64 rng(11);
  SUBCASE("identical rows") {
    Matrix y(50, 4);
    for (int i = 0; i < 50; ++i) y.row(i) << 1, 2, 3, 4;
    const SubsampleResult r = subsample_critical_value(PanelData(y), 1, 10, 30, 0.05, 1);
    CHECK(r.draws.size() == 30);
    CHECK((r.draws.array() - r.draws(0)).abs().maxCoeff() < 1e-12);
    CHECK(r.critical_value == doctest::Approx(r.draws(0)));
  }
  SUBCASE("single subsample") {
    const PanelData p(random_normal(40, 5, rng));
    const SubsampleResult r = subsample_critical_value(p, 2, 10, 1, 0.05, 2);
    CHECK(r.critical_value == r.draws(0));
  }
  SUBCASE("order statistic and reproducibility") {
    const PanelData p(random_normal(100, 5, rng));
    const SubsampleResult a = subsample_critical_value(p, 1, 25, 200, 0.1, 3);
    const SubsampleResult b = subsample_critical_value(p, 1, 25, 200, 0.1, 3);
    CHECK((a.draws - b.draws).norm() == 0.0);
    std::vector<double> s = to_std(a.draws);
    std::sort(s.begin(), s.end());
    CHECK(a.critical_value == s[179]);  // ceil(0.9 * 200) = 180th smallest
  }
  SUBCASE("bounds") {
    const PanelData p(random_normal(20, 5, rng));
    CHECK_THROWS_AS(subsample_critical_value(p, 1, 20, 10, 0.05, 1), InvalidInput);
    CHECK_THROWS_AS(subsample_critical_value(p, 0, 10, 10, 0.05, 1), InvalidInput);
  }
}

TEST_CASE("p-values are roughly uniform under the null (DGP1)") {
  dgp::DgpConfig cfg;
  dgp::Dgp1 m;
  m.n = 2000;
  cfg.model = m;
  Rng design_rng = make_stream(77, 0);
  const dgp::DgpDesign design = dgp::draw_design(cfg, design_rng);
  int reject = 0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(77, r + 1);
    const dgp::DgpDraw draw = dgp::generate(design, rng);
    const FactorFit fit = stats::pca_fit(draw.panel, 3);
    const EtaQEstimate e = estimate_eta_q(fit);
    const SpacingLaws laws = simulate_law_S(IndepErrors{e.eta, e.q}, 12, 3, fit.Q_hat, 999, 1000 + r);
    const double s = std::sqrt(2000.0) * stats::stat_S(stats::return_second_moment(draw.panel), 3);
    if (pvalue(s, laws.spread) <= 0.05) ++reject;
  }
  const double rate = static_cast<double>(reject) / reps;
  CHECK(rate >= 0.03);
  CHECK(rate <= 0.07);
}
