// Command-line front end: factor-number tests on CSV panels, Monte Carlo
// tables, local power curves and density grids.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "shortpanel/cli/csv_io.hpp"
#include "shortpanel/cli/montecarlo.hpp"
#include "shortpanel/cli/plot_data.hpp"
#include "shortpanel/cli/sweep.hpp"
#include "shortpanel/densities.hpp"

namespace sp = shortpanel;
namespace cli = shortpanel::cli;

namespace {

struct TestArgs {
  std::string panel, instruments, out = "report";
  int k_min = 0, k_max = 0;
  std::vector<std::string> stats{"S"};
  std::vector<std::string> methods{"indep", "instr_general"};
  int draws = 10000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  int k_star = -1, subsample_m = -1, subsample_B = 1000;
};

struct MonteCarloArgs {
  int dgp = 1;
  std::string grid, out = "montecarlo";
  int reps = 1000, paths = 1, draws = 999;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::vector<std::string> stats, methods;
  int subsample_m = -1, subsample_B = 1000;
};

struct PowerArgs {
  int t_minus_k = 2;
  double alpha = 0.05, a_max = 8.0, phi = 0.5, eta_star = -1.0;
  int grid_points = 41, draws = 100000;
  std::uint64_t seed = 1;
  std::string stat = "S", out = "power";
};

struct DensityArgs {
  std::vector<std::string> families{"f2", "f3", "g3", "goe3joint"};
  double x_max = 8.0, s_max = 8.0;
  int points = 401, grid_size = 200;
  std::string out = "densities";
};

void print_warnings(const std::string& context, const sp::Warnings& w) {
  for (const auto& s : w) std::cerr << "warning: " << context << ": " << s << '\n';
}

int run_test(const TestArgs& a) {
  const cli::LoadedPanel panel = cli::load_panel(a.panel);
  std::optional<sp::stats::InstrumentPanel> instruments;
  if (!a.instruments.empty()) instruments = cli::load_instruments(a.instruments, panel);

  cli::SweepConfig cfg;
  cfg.k_min = a.k_min;
  cfg.k_max = a.k_max;
  cfg.statistics.clear();
  for (const auto& s : a.stats) cfg.statistics.push_back(cli::parse_statistic(s));
  cfg.methods.clear();
  for (const auto& m : a.methods) cfg.methods.push_back(cli::parse_var_method(m));
  cfg.options.draws = a.draws;
  cfg.options.alpha = a.alpha;
  if (a.k_star >= 0) cfg.options.k_star = a.k_star;
  if (a.subsample_m >= 0) cfg.options.subsample_m = a.subsample_m;
  cfg.options.subsample_B = a.subsample_B;
  cfg.seed = a.seed;

  const cli::TestReport report = cli::run_test_sweep(cfg, panel.data, instruments ? &*instruments : nullptr);
  cli::write_report(report, a.out);
  for (const auto& r : report.rows) {
    print_warnings(cli::to_string(r.request.statistic) + " k=" + std::to_string(r.request.k), r.warnings);
    std::cout << cli::to_string(r.request.statistic) << " k=" << r.request.k << " ["
              << cli::to_string(r.request.method) << "] value=" << cli::format_double(r.value)
              << " p=" << cli::format_double(r.p_value) << '\n';
  }
  for (const auto& n : report.notes) std::cerr << "note: " << n << '\n';
  return 0;
}

int run_montecarlo(const MonteCarloArgs& a) {
  cli::MonteCarloConfig cfg;
  cfg.dgp = a.dgp;
  cfg.grid = a.grid.empty() ? std::vector<cli::GridPoint>{cli::GridPoint{}} : cli::load_grid(a.grid);
  cfg.reps = a.reps;
  cfg.paths = a.paths;
  cfg.seed = a.seed;
  cfg.options.draws = a.draws;
  cfg.options.alpha = a.alpha;
  if (a.subsample_m >= 0) cfg.options.subsample_m = a.subsample_m;
  cfg.options.subsample_B = a.subsample_B;
  for (const auto& s : a.stats) cfg.statistics.push_back(cli::parse_statistic(s));
  for (const auto& m : a.methods) cfg.methods.push_back(cli::parse_var_method(m));
  const auto rows = cli::run_montecarlo(cfg);
  cli::write_montecarlo(rows, a.out);
  for (const auto& r : rows)
    std::cout << "DGP" << r.dgp << " n=" << r.grid.n << " T=" << r.grid.T << " "
              << cli::to_string(r.cell.request.statistic) << "(" << r.cell.request.k << ") ["
              << cli::to_string(r.cell.request.method) << "] " << cli::format_double(r.cell.rejection_pct) << "%\n";
  return 0;
}

int run_power(const PowerArgs& a) {
  if (a.grid_points < 2) throw sp::InvalidInput("--grid-points must be at least 2");
  std::vector<double> grid;
  for (int i = 0; i < a.grid_points; ++i) grid.push_back(a.a_max * i / (a.grid_points - 1));
  const cli::Statistic stat = cli::parse_statistic(a.stat);
  if (stat != cli::Statistic::S && stat != cli::Statistic::SStar) throw sp::InvalidInput("--stat must be S or Sstar");

  cli::ensure_directory(a.out);
  cli::Manifest manifest;
  const auto gauss = sp::densities::local_power_gaussian(
      a.t_minus_k, a.alpha, grid, a.draws, a.seed,
      stat == cli::Statistic::S ? sp::densities::PowerStatistic::S : sp::densities::PowerStatistic::SStar);
  cli::write_power_curve(gauss, std::filesystem::path(a.out) / "power_gaussian.csv");
  manifest.add("power_gaussian.csv",
               "asymptotic local power, Gaussian errors, T-k = " + std::to_string(a.t_minus_k) + ", statistic " + a.stat,
               {{"a", "T c_{k+1} / sqrt(q)"}, {"power", "rejection probability at the nominal level"}});
  if (a.eta_star > 0.0) {
    if (a.t_minus_k != 2) throw sp::InvalidInput("--eta-star applies to T-k = 2 only");
    const auto ng = sp::densities::local_power_nongaussian_T2(a.eta_star, a.phi, a.alpha, grid, a.draws,
                                                              sp::derive_seed(a.seed, 1));
    cli::write_power_curve(ng, std::filesystem::path(a.out) / "power_nongaussian.csv");
    manifest.add("power_nongaussian.csv", "asymptotic local power, T-k = 2, eta* = " + cli::format_double(a.eta_star) +
                                              ", phi = " + cli::format_double(a.phi),
                 {{"a", "T c_{k+1} / sqrt(q)"}, {"power", "rejection probability at the nominal level"}});
  }
  manifest.write(a.out);
  return 0;
}

int run_densities(const DensityArgs& a) {
  cli::ensure_directory(a.out);
  cli::Manifest manifest;
  for (const auto& name : a.families) {
    const auto fam = cli::parse_density_family(name);
    const std::string file = "density_" + name + ".csv";
    const auto path = std::filesystem::path(a.out) / file;
    if (fam == cli::DensityFamily::Goe3Joint) {
      cli::write_density_joint(a.s_max, a.grid_size, path);
      manifest.add(file, "joint density of the two GOE(3) eigenvalue spacings (level-curve grid)",
                   {{"s1", "delta_1 - delta_2"}, {"s2", "delta_2 - delta_3"}, {"pdf", "joint density"}});
    } else {
      cli::write_density_1d(fam, a.x_max, a.points, path);
      const char* what = fam == cli::DensityFamily::F2   ? "GOE(2) eigenvalue spacing"
                         : fam == cli::DensityFamily::F3 ? "GOE(3) total spacing delta_1 - delta_3"
                                                          : "GOE(3) spacing ratio";
      manifest.add(file, std::string("density of the ") + what,
                   {{"x", "evaluation point"}, {"pdf", "density"}, {"cdf", "distribution function"}});
    }
  }
  manifest.write(a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tests for the number of latent factors in short panels"};
  app.set_config("--config", "", "INI-style config file; sections [test], [montecarlo], [power], [densities]");
  app.require_subcommand(1);

  TestArgs ta;
  auto* test = app.add_subcommand("test", "p-values for a range of factor numbers on a CSV panel");
  test->add_option("--panel", ta.panel, "panel CSV (asset_id,t1,...,tT)")->required()->check(CLI::ExistingFile);
  test->add_option("--instruments", ta.instruments, "instrument CSV (asset_id,z1,...,zK)")->check(CLI::ExistingFile);
  test->add_option("--k-min", ta.k_min, "smallest k tested")->capture_default_str();
  test->add_option("--k-max", ta.k_max, "largest k tested")->capture_default_str();
  test->add_option("--stat", ta.stats, "comma list of S, Sstar, Tiv, Delta")->delimiter(',')->capture_default_str();
  test->add_option("--var-method", ta.methods, "comma list of indep, arch, nonparam, instr_homo, instr_general, subsample")
      ->delimiter(',')
      ->capture_default_str();
  test->add_option("--draws", ta.draws, "simulation draws per null law")->capture_default_str();
  test->add_option("--alpha", ta.alpha, "nominal level")->capture_default_str();
  test->add_option("--seed", ta.seed, "random seed")->capture_default_str();
  test->add_option("--k-star", ta.k_star, "upper index of the spacing-ratio maximum (default T-2)");
  test->add_option("--subsample-m", ta.subsample_m, "subsample size for Delta (default n/4)");
  test->add_option("--subsample-B", ta.subsample_B, "number of subsamples for Delta")->capture_default_str();
  test->add_option("--out", ta.out, "output directory")->capture_default_str();

  MonteCarloArgs ma;
  auto* mc = app.add_subcommand("montecarlo", "rejection-frequency tables for DGP1-DGP4");
  mc->add_option("--dgp", ma.dgp, "DGP number")->check(CLI::Range(1, 4))->capture_default_str();
  mc->add_option("--grid", ma.grid, "grid CSV with columns among n,T,kappa,c")->check(CLI::ExistingFile);
  mc->add_option("--reps", ma.reps, "repetitions per factor path")->capture_default_str();
  mc->add_option("--paths", ma.paths, "number of factor paths")->capture_default_str();
  mc->add_option("--draws", ma.draws, "simulation draws per test")->capture_default_str();
  mc->add_option("--alpha", ma.alpha, "nominal level")->capture_default_str();
  mc->add_option("--seed", ma.seed, "random seed")->capture_default_str();
  mc->add_option("--stat", ma.stats, "comma list of statistics (default per DGP)")->delimiter(',');
  mc->add_option("--var-method", ma.methods, "comma list of variance methods (default per DGP)")->delimiter(',');
  mc->add_option("--subsample-m", ma.subsample_m, "subsample size for Delta (default n/4)");
  mc->add_option("--subsample-B", ma.subsample_B, "number of subsamples for Delta")->capture_default_str();
  mc->add_option("--out", ma.out, "output directory")->capture_default_str();

  PowerArgs pa;
  auto* power = app.add_subcommand("power", "asymptotic local power curves");
  power->add_option("--t-minus-k", pa.t_minus_k, "T-k")->capture_default_str();
  power->add_option("--alpha", pa.alpha, "nominal level")->capture_default_str();
  power->add_option("--a-max", pa.a_max, "largest a on the grid")->capture_default_str();
  power->add_option("--grid-points", pa.grid_points, "number of grid points")->capture_default_str();
  power->add_option("--eta-star", pa.eta_star, "eta/q for the non-Gaussian T-k = 2 curve");
  power->add_option("--phi", pa.phi, "Q_11^2 for the non-Gaussian curve")->capture_default_str();
  power->add_option("--draws", pa.draws, "simulation draws")->capture_default_str();
  power->add_option("--seed", pa.seed, "random seed")->capture_default_str();
  power->add_option("--stat", pa.stat, "S or Sstar")->capture_default_str();
  power->add_option("--out", pa.out, "output directory")->capture_default_str();

  DensityArgs da;
  auto* dens = app.add_subcommand("densities", "density grids for plotting");
  dens->add_option("--family", da.families, "comma list of f2, f3, g3, goe3joint")->delimiter(',')->capture_default_str();
  dens->add_option("--x-max", da.x_max, "upper end of the 1-D grids")->capture_default_str();
  dens->add_option("--points", da.points, "points on the 1-D grids")->capture_default_str();
  dens->add_option("--s-max", da.s_max, "upper end of the joint grid")->capture_default_str();
  dens->add_option("--grid-size", da.grid_size, "joint grid points per axis")->capture_default_str();
  dens->add_option("--out", da.out, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (test->parsed()) return run_test(ta);
    if (mc->parsed()) return run_montecarlo(ma);
    if (power->parsed()) return run_power(pa);
    if (dens->parsed()) return run_densities(da);
  } catch (const sp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
