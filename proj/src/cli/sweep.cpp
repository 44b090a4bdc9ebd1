#include "shortpanel/cli/sweep.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "shortpanel/cli/csv_io.hpp"
#include "shortpanel/cli/plot_data.hpp"

namespace shortpanel::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void append(Warnings& to, const Warnings& from) { to.insert(to.end(), from.begin(), from.end()); }

std::string join(const Warnings& w) {
  std::string out;
  for (const auto& s : w) out += (out.empty() ? "" : "; ") + s;
  return out;
}

std::string cell_label(const TestRequest& r) {
  return to_string(r.statistic) + " at k = " + std::to_string(r.k) + " (" + to_string(r.method) + ")";
}

// Null laws of sqrt(n) S and S* for one (k, method) cell.
struct SpacingCell {
  nulldist::SpacingLaws laws;
  Warnings warnings;
};

SpacingCell spacing_cell(const stats::PanelData& panel, int k, VarMethod method, const EvalOptions& opt,
                         std::uint64_t seed) {
  const stats::FactorFit fit = stats::pca_fit(panel, k);
  const int t = static_cast<int>(panel.T());
  SpacingCell cell;
  nulldist::NullVarianceSpec spec;
  switch (method) {
    case VarMethod::Indep: {
      auto est = nulldist::estimate_eta_q(fit);
      append(cell.warnings, est.warnings);
      spec = nulldist::IndepErrors{est.eta, est.q};
      break;
    }
    case VarMethod::Arch: {
      auto est = nulldist::estimate_theta_md(fit);
      append(cell.warnings, est.warnings);
      spec = nulldist::ArchParam{est.theta};
      break;
    }
    case VarMethod::Nonparam: {
      auto est = nulldist::estimate_omega_nonparam(fit);
      append(cell.warnings, est.warnings);
      spec = nulldist::Nonparam{est.omega_bar};
      break;
    }
    default:
      throw InvalidParameter("method " + to_string(method) + " does not apply to S or S*");
  }
  std::optional<int> k_star = opt.k_star;
  // an out-of-range k_star only invalidates S* at this k, not S
  if (t - k < 3 || (k_star && (*k_star < k + 1 || *k_star > t - 2))) k_star.reset();
  cell.laws = nulldist::simulate_law_S(spec, t, k, fit.Q_hat, opt.draws, seed, k_star);
  return cell;
}

std::uint64_t cell_seed(std::uint64_t seed, int k, VarMethod m) {
  return derive_seed(seed, static_cast<std::uint64_t>(k) * 16 + static_cast<std::uint64_t>(m) + 1);
}

}  // namespace

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::S: return "S";
    case Statistic::SStar: return "Sstar";
    case Statistic::Tiv: return "Tiv";
    case Statistic::Delta: return "Delta";
  }
  return "?";
}

std::string to_string(VarMethod m) {
  switch (m) {
    case VarMethod::Indep: return "indep";
    case VarMethod::Arch: return "arch";
    case VarMethod::Nonparam: return "nonparam";
    case VarMethod::InstrHomo: return "instr_homo";
    case VarMethod::InstrGeneral: return "instr_general";
    case VarMethod::Subsample: return "subsample";
  }
  return "?";
}

Statistic parse_statistic(const std::string& s) {
  if (s == "S") return Statistic::S;
  if (s == "Sstar" || s == "S_star") return Statistic::SStar;
  if (s == "Tiv" || s == "T_iv" || s == "T") return Statistic::Tiv;
  if (s == "Delta") return Statistic::Delta;
  throw InvalidInput("unknown statistic '" + s + "' (expected S, Sstar, Tiv or Delta)");
}

VarMethod parse_var_method(const std::string& s) {
  if (s == "indep") return VarMethod::Indep;
  if (s == "arch") return VarMethod::Arch;
  if (s == "nonparam") return VarMethod::Nonparam;
  if (s == "instr_homo") return VarMethod::InstrHomo;
  if (s == "instr_general") return VarMethod::InstrGeneral;
  if (s == "subsample") return VarMethod::Subsample;
  throw InvalidInput("unknown variance method '" + s +
                     "' (expected indep, arch, nonparam, instr_homo, instr_general or subsample)");
}

bool method_applies(Statistic s, VarMethod m) {
  switch (s) {
    case Statistic::S:
    case Statistic::SStar:
      return m == VarMethod::Indep || m == VarMethod::Arch || m == VarMethod::Nonparam;
    case Statistic::Tiv:
      return m == VarMethod::InstrHomo || m == VarMethod::InstrGeneral;
    case Statistic::Delta:
      return m == VarMethod::Subsample;
  }
  return false;
}

std::vector<TestOutcome> evaluate_tests(const stats::PanelData& panel, const stats::InstrumentPanel* instruments,
                                        const std::vector<TestRequest>& requests, const EvalOptions& opt,
                                        std::uint64_t seed) {
  const double n = static_cast<double>(panel.n());
  const stats::SymMatrix v_y = stats::return_second_moment(panel);
  std::map<std::pair<int, VarMethod>, SpacingCell> spacing_cache;
  std::map<int, stats::InstrumentFit> iv_cache;

  std::vector<TestOutcome> out;
  out.reserve(requests.size());
  for (const TestRequest& req : requests) {
    if (!method_applies(req.statistic, req.method))
      throw InvalidParameter(cell_label(req) + ": method does not apply to this statistic");
    TestOutcome res;
    res.request = req;
    try {
      switch (req.statistic) {
        case Statistic::S:
        case Statistic::SStar: {
          const auto key = std::make_pair(req.k, req.method);
          auto it = spacing_cache.find(key);
          if (it == spacing_cache.end())
            it = spacing_cache.emplace(key, spacing_cell(panel, req.k, req.method, opt, cell_seed(seed, req.k, req.method)))
                     .first;
          const SpacingCell& cell = it->second;
          const nulldist::SimulatedLaw* law = &cell.laws.spread;
          if (req.statistic == Statistic::S) {
            res.value = std::sqrt(n) * stats::stat_S(v_y, req.k);
          } else {
            if (!cell.laws.ratio) throw InvalidParameter("S* needs T-k >= 3");
            res.value = stats::stat_S_star(v_y, req.k, opt.k_star);
            law = &*cell.laws.ratio;
          }
          res.critical_value = law->quantile(1.0 - opt.alpha);
          res.p_value = nulldist::pvalue(res.value, *law);
          res.draws = static_cast<int>(law->R());
          append(res.warnings, cell.warnings);
          append(res.warnings, law->warnings);
          break;
        }
        case Statistic::Tiv: {
          if (!instruments) throw InvalidInput("Tiv needs instruments");
          auto it = iv_cache.find(req.k);
          if (it == iv_cache.end()) it = iv_cache.emplace(req.k, stats::iv_fit(panel, *instruments, req.k)).first;
          const stats::InstrumentFit& iv = it->second;
          nulldist::NullVarianceSpec spec;
          if (req.method == VarMethod::InstrHomo)
            spec = nulldist::estimate_instr_homo(iv, *instruments);
          else
            spec = nulldist::estimate_lambda_hat(iv, *instruments);
          const nulldist::SimulatedLaw law =
              nulldist::simulate_law_T(spec, static_cast<int>(panel.T()), req.k, static_cast<int>(instruments->K()),
                                       opt.draws, cell_seed(seed, req.k, req.method));
          res.value = n * stats::stat_T(iv.V_xi_hat, req.k);
          res.critical_value = law.quantile(1.0 - opt.alpha);
          res.p_value = nulldist::pvalue(res.value, law);
          res.draws = static_cast<int>(law.R());
          append(res.warnings, law.warnings);
          break;
        }
        case Statistic::Delta: {
          const int m = opt.subsample_m.value_or(static_cast<int>(panel.n() / 4));
          const nulldist::SubsampleResult sub = nulldist::subsample_critical_value(
              panel, req.k, m, opt.subsample_B, opt.alpha, cell_seed(seed, req.k, req.method));
          res.value = stats::stat_Delta(v_y, req.k, n);
          res.critical_value = sub.critical_value;
          const auto exceed = (sub.draws.array() >= res.value).count();
          res.p_value = (1.0 + static_cast<double>(exceed)) / (static_cast<double>(sub.draws.size()) + 1.0);
          res.draws = static_cast<int>(sub.draws.size());
          break;
        }
      }
    } catch (const Error& e) {
      throw Error(cell_label(req) + ": " + e.what());
    }
    out.push_back(std::move(res));
  }
  return out;
}

TestReport run_test_sweep(const SweepConfig& config, const stats::PanelData& panel,
                          const stats::InstrumentPanel* instruments) {
  const int t = static_cast<int>(panel.T());
  if (config.k_min < 0 || config.k_max < config.k_min)
    throw InvalidInput("test sweep: need 0 <= k_min <= k_max");
  if (config.statistics.empty()) throw InvalidInput("test sweep: no statistic selected");
  const int ks = config.options.k_star.value_or(t - 2);

  TestReport report;
  report.alpha = config.options.alpha;
  std::vector<TestRequest> requests;
  for (const Statistic stat : config.statistics) {
    std::vector<VarMethod> methods;
    if (stat == Statistic::Delta) {
      methods.push_back(VarMethod::Subsample);
    } else {
      for (const VarMethod m : config.methods)
        if (method_applies(stat, m)) methods.push_back(m);
      if (methods.empty())
        throw InvalidInput("test sweep: no selected variance method applies to " + to_string(stat));
    }
    if ((stat == Statistic::S || stat == Statistic::SStar) && config.k_max > t - 2)
      throw InvalidInput("test sweep: k_max = " + std::to_string(config.k_max) + " exceeds T-2 = " +
                         std::to_string(t - 2) + " for " + to_string(stat));
    if (stat == Statistic::Tiv) {
      if (!instruments) throw InvalidInput("test sweep: Tiv needs --instruments");
      const int limit = static_cast<int>(std::min<Eigen::Index>(instruments->K(), panel.T()));
      if (config.k_max >= limit)
        throw InvalidInput("test sweep: k_max must be below min(K, T) = " + std::to_string(limit) + " for Tiv");
    }
    if (stat == Statistic::Delta && config.k_max > t - 1)
      throw InvalidInput("test sweep: k_max exceeds T-1 for Delta");

    for (int k = config.k_min; k <= config.k_max; ++k) {
      if (stat == Statistic::SStar && (t - k < 3 || ks < k + 1 || ks > t - 2)) {
        report.notes.push_back("Sstar skipped at k = " + std::to_string(k) + ": needs k+1 <= k_star <= T-2 and T-k >= 3");
        continue;
      }
      if (stat == Statistic::Delta && k < 1) {
        report.notes.push_back("Delta skipped at k = 0: defined for k >= 1");
        continue;
      }
      for (const VarMethod m : methods) requests.push_back({stat, k, m});
    }
  }
  report.rows = evaluate_tests(panel, instruments, requests, config.options, config.seed);

  auto add_spectrum = [&report](const std::string& name, const linalg::Vector& ev) {
    const auto d = ev.size();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double sp = j + 1 < d ? ev(j) - ev(j + 1) : kNaN;
      double ratio = kNaN;
      if (j + 2 < d) {
        const double next = ev(j + 1) - ev(j + 2);
        ratio = next > 0.0 ? sp / next : std::numeric_limits<double>::infinity();
      }
      report.eigenvalues.push_back({name, static_cast<int>(j + 1), ev(j), sp, ratio});
    }
  };
  add_spectrum("V_y", linalg::sym_eigvals(stats::return_second_moment(panel)));
  if (instruments) add_spectrum("V_xi", linalg::sym_eigvals(stats::portfolio_aggregates(panel, *instruments).v_xi));
  return report;
}

void write_report(const TestReport& report, const std::filesystem::path& outdir) {
  ensure_directory(outdir);
  {
    CsvWriter csv(outdir / "pvalues.csv");
    csv.row({"statistic", "k", "value", "critical_value", "p_value", "draws", "method", "warnings"});
    for (const auto& r : report.rows) {
      csv.field(to_string(r.request.statistic)).field(r.request.k).field(r.value).field(r.critical_value);
      csv.field(r.p_value).field(r.draws).field(to_string(r.request.method)).field(join(r.warnings));
      csv.end_row();
    }
  }
  {
    CsvWriter csv(outdir / "eigenvalues.csv");
    csv.row({"matrix", "index", "eigenvalue", "spacing", "ratio"});
    for (const auto& e : report.eigenvalues) {
      csv.field(e.matrix).field(e.index).field(e.eigenvalue).field(e.spacing).field(e.ratio);
      csv.end_row();
    }
  }
  Manifest manifest;
  manifest.add("pvalues.csv", "p-values for every tested (statistic, k, method) cell",
               {{"statistic", "S, Sstar, Tiv or Delta"},
                {"k", "number of factors under the null"},
                {"value", "statistic on the scale of its null law: sqrt(n)S(k), S*(k), nT(k) or Delta_k"},
                {"critical_value", "(1-alpha) quantile of the simulated or subsampled null law"},
                {"p_value", "(1 + #draws >= value) / (draws + 1)"},
                {"draws", "simulation draws or subsamples"},
                {"method", "variance method used for the null law"},
                {"warnings", "estimator and simulation diagnostics, '; '-separated"}});
  manifest.add("eigenvalues.csv", "spectra of V_y (and V_xi with instruments), with spacings and spacing ratios",
               {{"matrix", "V_y or V_xi"},
                {"index", "1-based rank, largest first"},
                {"eigenvalue", "delta_j"},
                {"spacing", "delta_j - delta_{j+1}"},
                {"ratio", "spacing_j / spacing_{j+1}"}});
  for (const auto& note : report.notes) manifest.note(note);
  manifest.write(outdir);
}

}  // namespace shortpanel::cli
