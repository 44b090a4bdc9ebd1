#include "shortpanel/nulldist.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace shortpanel::nulldist {

namespace {

constexpr double kVarFloor = 1e-12;
constexpr double kPsdSlack = 1e-8;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

SimulatedLaw make_law(std::vector<double> draws, std::uint64_t seed) {
  SimulatedLaw law;
  std::sort(draws.begin(), draws.end());
  law.draws = Eigen::Map<Vector>(draws.data(), static_cast<Eigen::Index>(draws.size()));
  law.seed = seed;
  if (draws.size() < 1000)
    law.warnings.push_back("only " + std::to_string(draws.size()) + " simulation draws (< 1000)");
  return law;
}

void check_draw_count(int r) {
  if (r < 1) throw InvalidParameter("simulation needs at least one draw");
}

// Factor L with L L' = cov after clipping small negative eigenvalues.
// Strongly indefinite input is rejected.
Matrix psd_factor(const Matrix& cov, Warnings& warnings, const char* what) {
  if (!cov.allFinite()) throw SimulationFailure(std::string(what) + ": non-finite covariance");
  const linalg::SymEig eig = linalg::sym_eig(SymMatrix(cov));
  const double top = std::max(eig.values(0), 0.0);
  const double floor = -kPsdSlack * std::max(1.0, top);
  Vector root(eig.values.size());
  int clipped = 0;
  for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
    const double v = eig.values(j);
    if (v < floor) {
      if (v < -1e-3 * std::max(top, 1e-300))
        throw SimulationFailure(std::string(what) + ": covariance is not PSD (eigenvalue " + fmt(v) +
                                ")");
      ++clipped;
    }
    root(j) = v > 0.0 ? std::sqrt(v) : 0.0;
  }
  if (clipped > 0)
    warnings.push_back(std::string(what) + ": clipped " + std::to_string(clipped) +
                       " negative eigenvalue(s) to zero");
  return eig.vectors * root.asDiagonal();
}

// Symmetrized m x m matrix from a vec draw.
void unvec_sym(const Vector& v, Eigen::Index m, Matrix& out) {
  out = Eigen::Map<const Matrix>(v.data(), m, m);
  out = 0.5 * (out + out.transpose()).eval();
}

// g = w (x) w laid out as vec(w w').
Vector outer_vec(const Vector& w) {
  const Eigen::Index m = w.size();
  Vector g(m * m);
  for (Eigen::Index b = 0; b < m; ++b) g.segment(b * m, m) = w * w(b);
  return g;
}

// Basis matrices of the linear theta parameterization of E[vec(ZZ) vec(ZZ)'] on
// the T^2 space: B_0 carries q (mean term plus the q part of off-diagonal
// variances), B_{h+1} carries q psi(h).
std::vector<Matrix> theta_basis(int t) {
  const Eigen::Index tt = static_cast<Eigen::Index>(t) * t;
  std::vector<Matrix> basis(static_cast<std::size_t>(t) + 1, Matrix::Zero(tt, tt));
  auto idx = [t](int a, int b) { return static_cast<Eigen::Index>(a) + static_cast<Eigen::Index>(b) * t; };
  for (int a = 0; a < t; ++a) {
    for (int b = 0; b < t; ++b) {
      basis[0](idx(a, a), idx(b, b)) += 1.0;  // vec(I) vec(I)'
      basis[static_cast<std::size_t>(std::abs(a - b)) + 1](idx(a, a), idx(b, b)) += 2.0;
      if (a == b) continue;
      const auto h = static_cast<std::size_t>(std::abs(a - b));
      for (const Eigen::Index col : {idx(a, b), idx(b, a)}) {
        basis[0](idx(a, b), col) += 1.0;
        basis[h + 1](idx(a, b), col) += 2.0;
      }
    }
  }
  return basis;
}

using Sampler = std::function<void(Rng&, Matrix&)>;

}  // namespace

double SimulatedLaw::quantile(double p) const {
  if (draws.size() == 0) throw InvalidParameter("quantile of an empty law");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("quantile level must lie in (0, 1]");
  const auto r = static_cast<double>(draws.size());
  auto idx = static_cast<Eigen::Index>(std::ceil(p * r - 1e-9));
  idx = std::clamp<Eigen::Index>(idx, 1, draws.size());
  return draws(idx - 1);
}

double estimate_sigma2(const stats::FactorFit& fit) {
  const Eigen::Index m = fit.T() - fit.k;
  if (m < 1) throw InvalidInput("estimate_sigma2: need T > k");
  return fit.residuals.squaredNorm() / (static_cast<double>(fit.n()) * static_cast<double>(m));
}

EtaQEstimate estimate_eta_q(const stats::FactorFit& fit) {
  const auto m = static_cast<double>(fit.T() - fit.k);
  const Matrix& mf = fit.M_Fhat;
  EtaQEstimate est{};
  est.a = mf.diagonal().squaredNorm();
  est.b = 2.0 * (m - est.a) + m * m;
  est.c = mf.array().pow(4).sum();
  est.d = 3.0 * est.a - 2.0 * est.c;

  const double lhs = 3.0 * est.a * est.a;
  const double rhs = est.c * m * (m + 2.0);
  if (std::abs(lhs - rhs) <= 1e-8 * std::max(std::abs(lhs), std::abs(rhs)))
    throw IdentificationFailure("estimate_eta_q: 3a^2 = c(T-k)(T-k+2), eta and q are not identified");

  const Vector row_ss = fit.residuals.rowwise().squaredNorm();
  const double m1 = row_ss.squaredNorm() / static_cast<double>(fit.n());
  const double m2 = fit.residuals.array().pow(4).sum() / static_cast<double>(fit.n());
  const double det = est.a * est.d - est.b * est.c;
  est.eta = (est.d * m1 - est.b * m2) / det;
  est.q = (est.a * m2 - est.c * m1) / det;
  if (!(est.eta > kVarFloor)) {
    est.warnings.push_back("estimate_eta_q: eta estimate " + fmt(est.eta) + " clipped to 1e-12");
    est.eta = kVarFloor;
  }
  if (!(est.q > kVarFloor)) {
    est.warnings.push_back("estimate_eta_q: q estimate " + fmt(est.q) + " clipped to 1e-12");
    est.q = kVarFloor;
  }
  return est;
}

SymMatrix simulate_Z_indep(int t, double eta, double q, Rng& rng) {
  if (t < 1) throw InvalidParameter("simulate_Z_indep: T must be positive");
  if (!(eta > 0.0) || !(q > 0.0)) throw InvalidParameter("simulate_Z_indep: eta and q must be positive");
  std::normal_distribution<double> normal;
  const double sd_diag = std::sqrt(eta);
  const double sd_off = std::sqrt(q);
  Matrix z(t, t);
  for (int a = 0; a < t; ++a) {
    z(a, a) = sd_diag * normal(rng);
    for (int b = a + 1; b < t; ++b) z(a, b) = z(b, a) = sd_off * normal(rng);
  }
  return SymMatrix(std::move(z));
}

Matrix build_omega_arch(const Vector& theta) {
  if (theta.size() < 3) throw InvalidParameter("build_omega_arch: theta must have length T + 1 >= 3");
  if (!theta.allFinite()) throw InvalidParameter("build_omega_arch: non-finite theta");
  const int t = static_cast<int>(theta.size()) - 1;
  if (!(theta(1) > 0.0))
    throw InvalidParameter("build_omega_arch: Var(Z_tt) = 2 q psi(0) must be positive, got " +
                           fmt(2.0 * theta(1)));
  for (int h = 1; h < t; ++h)
    if (!(theta(0) + 2.0 * theta(h + 1) > 0.0))
      throw InvalidParameter("build_omega_arch: Var(Z_t,t+" + std::to_string(h) +
                             ") must be positive, got " + fmt(theta(0) + 2.0 * theta(h + 1)));

  const Eigen::Index tt = static_cast<Eigen::Index>(t) * t;
  Matrix omega = Matrix::Zero(tt, tt);
  auto idx = [t](int a, int b) { return static_cast<Eigen::Index>(a) + static_cast<Eigen::Index>(b) * t; };
  for (int a = 0; a < t; ++a) {
    for (int b = 0; b < t; ++b) {
      const int h = std::abs(a - b);
      omega(idx(a, a), idx(b, b)) = 2.0 * theta(h + 1);
      if (a != b) {
        const double v = theta(0) + 2.0 * theta(h + 1);
        omega(idx(a, b), idx(a, b)) = v;
        omega(idx(a, b), idx(b, a)) = v;
      }
    }
  }
  return omega;
}

ThetaEstimate estimate_theta_md(const stats::FactorFit& fit) {
  const int t = static_cast<int>(fit.T());
  const int m = t - fit.k;
  const int p = t + 1;
  const double half = 0.5 * m * (m + 1);
  if (static_cast<double>(p) > half * (half + 1.0) / 2.0)
    throw IdentificationFailure("estimate_theta_md: order condition fails (p = " + std::to_string(p) +
                                ", T-k = " + std::to_string(m) + ")");

  const Matrix& q = fit.Q_hat;
  const Matrix proj = linalg::kron(q, q);  // T^2 x m^2

  // target (1/n) sum g_i g_i', g_i = (Q'e_i) (x) (Q'e_i)
  const Matrix w = fit.residuals * q;  // n x m
  Matrix g(w.rows(), static_cast<Eigen::Index>(m) * m);
  for (Eigen::Index i = 0; i < w.rows(); ++i) g.row(i) = outer_vec(w.row(i).transpose()).transpose();
  const Matrix target = linalg::second_moment(g).matrix();

  // The q basis equals half the sum of all q psi(h) bases, which only moves Z
  // by a random multiple of I. Fixing psi(T-1) = 0 (the farthest lag) pins q.
  const int free = p - 1;
  const std::vector<Matrix> basis = theta_basis(t);
  std::vector<Matrix> design;
  for (int j = 0; j < free; ++j) design.push_back(proj.transpose() * basis[static_cast<std::size_t>(j)] * proj);

  Matrix normal(free, free);
  Vector rhs(free);
  for (int j = 0; j < free; ++j) {
    rhs(j) = design[static_cast<std::size_t>(j)].cwiseProduct(target).sum();
    for (int l = j; l < free; ++l)
      normal(j, l) = normal(l, j) =
          design[static_cast<std::size_t>(j)].cwiseProduct(design[static_cast<std::size_t>(l)]).sum();
  }

  ThetaEstimate est;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(normal);
  cod.setThreshold(1e-10);
  if (cod.rank() < free)
    est.warnings.push_back("estimate_theta_md: design has rank " + std::to_string(cod.rank()) + " < " +
                           std::to_string(free) + ", using the minimum-norm solution");
  est.theta = Vector::Zero(p);
  est.theta.head(free) = cod.solve(rhs);

  if (!(est.theta(0) > kVarFloor)) {
    est.warnings.push_back("estimate_theta_md: q estimate " + fmt(est.theta(0)) + " clipped to 1e-12");
    est.theta(0) = kVarFloor;
  }
  if (!(est.theta(1) > kVarFloor)) {
    est.warnings.push_back("estimate_theta_md: q psi(0) estimate " + fmt(est.theta(1)) +
                           " clipped to 1e-12");
    est.theta(1) = kVarFloor;
  }
  for (int h = 1; h < t; ++h) {
    if (!(est.theta(0) + 2.0 * est.theta(h + 1) > kVarFloor)) {
      est.warnings.push_back("estimate_theta_md: q psi(" + std::to_string(h) +
                             ") clipped so that Var(Z_t,t+h) stays positive");
      est.theta(h + 1) = 0.5 * (kVarFloor - est.theta(0)) + 0.5 * kVarFloor;
    }
  }

  // Omega(theta) is PSD iff the Toeplitz matrix [theta(|a-b|+1)] is, because
  // the (a,b)/(b,a) blocks are already PSD. Shrink the lag terms if needed.
  Matrix lags = Matrix::Zero(t, t);
  for (int a = 0; a < t; ++a)
    for (int b = 0; b < t; ++b)
      if (a != b) lags(a, b) = est.theta(std::abs(a - b) + 1);
  const double low = linalg::sym_eigvals(SymMatrix(lags)).minCoeff();
  if (est.theta(1) + low < 0.0) {
    const double shrink = 0.999 * est.theta(1) / -low;
    est.theta.segment(2, t - 1) *= shrink;
    est.warnings.push_back("estimate_theta_md: lag terms shrunk by " + fmt(shrink) + " to keep Omega PSD");
  }
  return est;
}

NonparamEstimate estimate_omega_nonparam(const stats::FactorFit& fit) {
  const Eigen::Index m = fit.T() - fit.k;
  NonparamEstimate est;
  if (fit.n() < m * m)
    est.warnings.push_back("estimate_omega_nonparam: n = " + std::to_string(fit.n()) + " < (T-k)^2 = " +
                           std::to_string(m * m) + ", the estimate may be singular");
  const Matrix w = fit.residuals * fit.Q_hat;
  const Vector vec_i = linalg::vec(Matrix::Identity(m, m));
  Matrix g(w.rows(), m * m);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const Vector wi = w.row(i).transpose();
    g.row(i) = (outer_vec(wi) - (wi.squaredNorm() / static_cast<double>(m)) * vec_i).transpose();
  }
  est.omega_bar = linalg::second_moment(g).matrix();
  return est;
}

SpacingLaws simulate_law_S(const NullVarianceSpec& spec, int t, int k, const Matrix& q_hat, int r,
                           std::uint64_t seed, std::optional<int> k_star) {
  check_draw_count(r);
  if (k < 0 || k > t - 2) throw InvalidParameter("simulate_law_S: need 0 <= k <= T-2");
  const int m = t - k;
  const int ks = k_star.value_or(t - 2);
  const bool with_ratio = m >= 3;
  if (with_ratio && (ks < k + 1 || ks > t - 2))
    throw InvalidParameter("simulate_law_S: need k+1 <= k_star <= T-2");

  Warnings warnings;
  Sampler sampler;
  auto require_q = [&] {
    if (q_hat.rows() != t || q_hat.cols() != m)
      throw InvalidParameter("simulate_law_S: Q_hat must be T x (T-k)");
  };

  if (const auto* ind = std::get_if<IndepErrors>(&spec)) {
    require_q();
    if (!(ind->eta > 0.0) || !(ind->q > 0.0))
      throw InvalidParameter("simulate_law_S: eta and q must be positive");
    sampler = [ind, &q_hat, t](Rng& rng, Matrix& out) {
      out.noalias() = q_hat.transpose() * simulate_Z_indep(t, ind->eta, ind->q, rng).matrix() * q_hat;
    };
  } else if (const auto* arch = std::get_if<ArchParam>(&spec)) {
    require_q();
    if (arch->theta.size() != t + 1) throw InvalidParameter("simulate_law_S: theta must have length T + 1");
    const Matrix proj = linalg::kron(q_hat, q_hat);
    const Matrix cov = proj.transpose() * build_omega_arch(arch->theta) * proj;
    sampler = [factor = psd_factor(cov, warnings, "ArchParam"), m](Rng& rng, Matrix& out) {
      std::normal_distribution<double> normal;
      Vector xi(factor.cols());
      for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = normal(rng);
      unvec_sym(factor * xi, m, out);
    };
  } else if (const auto* np = std::get_if<Nonparam>(&spec)) {
    if (np->omega_bar.rows() != static_cast<Eigen::Index>(m) * m || np->omega_bar.cols() != np->omega_bar.rows())
      throw InvalidParameter("simulate_law_S: omega_bar must be (T-k)^2 x (T-k)^2");
    sampler = [factor = psd_factor(np->omega_bar, warnings, "Nonparam"), m](Rng& rng, Matrix& out) {
      std::normal_distribution<double> normal;
      Vector xi(factor.cols());
      for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = normal(rng);
      unvec_sym(factor * xi, m, out);
    };
  } else {
    throw InvalidParameter("simulate_law_S: instrument variance specs do not apply to S");
  }

  Rng rng = make_stream(seed);
  linalg::SpectrumWorkspace ws(m);
  std::vector<double> spread(static_cast<std::size_t>(r));
  std::vector<double> ratio(with_ratio ? static_cast<std::size_t>(r) : 0);
  Matrix spacings(r, m - 1);
  Matrix zstar(m, m);
  for (int i = 0; i < r; ++i) {
    sampler(rng, zstar);
    const Vector& ev = ws.descending(zstar);
    spread[static_cast<std::size_t>(i)] = ev(0) - ev(m - 1);
    for (int j = 0; j + 1 < m; ++j) spacings(i, j) = ev(j) - ev(j + 1);
    if (with_ratio) ratio[static_cast<std::size_t>(i)] = stats::max_spacing_ratio(ev, 1, ks - k);
  }

  SpacingLaws out{make_law(std::move(spread), seed), std::nullopt, std::move(spacings)};
  out.spread.warnings.insert(out.spread.warnings.end(), warnings.begin(), warnings.end());
  if (with_ratio) {
    out.ratio = make_law(std::move(ratio), seed);
    out.ratio->warnings.insert(out.ratio->warnings.end(), warnings.begin(), warnings.end());
  }
  return out;
}

SimulatedLaw simulate_law_T(const NullVarianceSpec& spec, int t, int k, int kk, int r, std::uint64_t seed) {
  check_draw_count(r);
  if (k < 0 || k >= kk || k >= t) throw InvalidParameter("simulate_law_T: need 0 <= k < min(K, T)");
  const int m = t - k;

  Vector weights;
  int dof = 1;
  if (const auto* homo = std::get_if<InstrHomo>(&spec)) {
    if (homo->weights.size() != kk - k) throw InvalidParameter("simulate_law_T: InstrHomo needs K-k weights");
    weights = homo->weights;
    dof = m;
  } else if (const auto* gen = std::get_if<InstrGeneral>(&spec)) {
    if (gen->lambda.size() != static_cast<Eigen::Index>(m) * (kk - k))
      throw InvalidParameter("simulate_law_T: InstrGeneral needs (T-k)(K-k) eigenvalues");
    weights = gen->lambda;
  } else {
    throw InvalidParameter("simulate_law_T: only instrument variance specs apply to T");
  }
  if (!weights.allFinite()) throw InvalidParameter("simulate_law_T: non-finite weights");
  Warnings warnings;
  if (weights.minCoeff() < 0.0) {
    warnings.push_back("simulate_law_T: negative weights clipped to zero");
    weights = weights.cwiseMax(0.0);
  }

  Rng rng = make_stream(seed);
  std::normal_distribution<double> normal;
  std::vector<double> draws(static_cast<std::size_t>(r));
  for (auto& d : draws) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
      double chi2 = 0.0;
      for (int l = 0; l < dof; ++l) {
        const double x = normal(rng);
        chi2 += x * x;
      }
      acc += weights(j) * chi2;
    }
    d = acc / static_cast<double>(t);
  }
  SimulatedLaw law = make_law(std::move(draws), seed);
  law.warnings.insert(law.warnings.end(), warnings.begin(), warnings.end());
  return law;
}

InstrGeneral estimate_lambda_hat(const stats::InstrumentFit& iv, const stats::InstrumentPanel& instruments) {
  const stats::FactorFit& fit = iv.factor_fit;
  if (instruments.n() != fit.n()) throw InvalidInput("estimate_lambda_hat: instrument rows do not match");
  // Lambda = (Q (x) Pi) S (Q (x) Pi)' with S the second moment of
  // (Q'e_i) (x) (Pi'z_i); its non-zero spectrum is that of S.
  const Matrix w = fit.residuals * fit.Q_hat;          // n x (T-k)
  const Matrix v = instruments.z() * iv.Pi_hat;        // n x (K-k)
  const Eigen::Index m = w.cols(), p = v.cols();
  Matrix x(w.rows(), m * p);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index a = 0; a < m; ++a) x.block(i, a * p, 1, p) = w(i, a) * v.row(i);
  InstrGeneral out;
  out.lambda = linalg::sym_eigvals(linalg::second_moment(x)).cwiseMax(0.0);
  return out;
}

InstrHomo estimate_instr_homo(const stats::InstrumentFit& iv, const stats::InstrumentPanel& instruments) {
  if (instruments.n() != iv.factor_fit.n()) throw InvalidInput("estimate_instr_homo: instrument rows do not match");
  InstrHomo out;
  out.sigma2 = estimate_sigma2(iv.factor_fit);
  const SymMatrix qzz = linalg::second_moment(instruments.z());
  const Matrix reduced = out.sigma2 * (iv.Pi_hat.transpose() * qzz.matrix() * iv.Pi_hat);
  out.weights = linalg::sym_eigvals(SymMatrix(reduced)).cwiseMax(0.0);
  return out;
}

double pvalue(double stat_value, const SimulatedLaw& law) {
  if (law.R() < 1) throw InvalidParameter("pvalue: empty law");
  if (std::isnan(stat_value)) throw InvalidInput("pvalue: statistic is NaN");
  const double* begin = law.draws.data();
  const double* end = begin + law.R();
  const auto below = std::lower_bound(begin, end, stat_value) - begin;
  const double exceed = static_cast<double>(law.R() - below);
  return (1.0 + exceed) / (static_cast<double>(law.R()) + 1.0);
}

SubsampleResult subsample_critical_value(const stats::PanelData& panel, int k, int m, int b, double alpha,
                                         std::uint64_t seed) {
  const Eigen::Index n = panel.n();
  const Eigen::Index t = panel.T();
  if (k < 1 || k > t - 1) throw InvalidInput("subsample_critical_value: need 1 <= k <= T-1");
  if (m < 2 || m >= n) throw InvalidInput("subsample_critical_value: need 2 <= m < n");
  if (b < 1) throw InvalidParameter("subsample_critical_value: B must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("subsample_critical_value: alpha must lie in (0,1)");

  Rng rng = make_stream(seed);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  linalg::SpectrumWorkspace ws(t);
  Matrix sub(m, t);
  SubsampleResult out{0.0, Vector(b)};
  const double root_m = std::sqrt(static_cast<double>(m));
  for (int rep = 0; rep < b; ++rep) {
    // partial Fisher-Yates: the first m slots form a uniform draw without replacement
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
      sub.row(i) = panel.y().row(perm[static_cast<std::size_t>(i)]);
    }
    Matrix v = Matrix::Zero(t, t);
    v.selfadjointView<Eigen::Lower>().rankUpdate(sub.transpose(), 1.0 / static_cast<double>(m));
    v.triangularView<Eigen::StrictlyUpper>() = v.transpose().triangularView<Eigen::StrictlyUpper>();
    const Vector& ev = ws.descending(v);
    out.draws(rep) = root_m * std::max(0.0, ev(k - 1) - ev(k));
  }
  std::vector<double> sorted(out.draws.data(), out.draws.data() + b);
  std::sort(sorted.begin(), sorted.end());
  auto idx = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b - 1e-9));
  idx = std::clamp<std::size_t>(idx, 1, static_cast<std::size_t>(b));
  out.critical_value = sorted[idx - 1];
  return out;
}

}  // namespace shortpanel::nulldist
