#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shortpanel/nulldist.hpp"
#include "shortpanel/stats.hpp"

namespace shortpanel::cli {

enum class Statistic { S, SStar, Tiv, Delta };
enum class VarMethod { Indep, Arch, Nonparam, InstrHomo, InstrGeneral, Subsample };

std::string to_string(Statistic s);
std::string to_string(VarMethod m);
Statistic parse_statistic(const std::string& s);
VarMethod parse_var_method(const std::string& s);

/// Whether a variance method applies to a statistic (S/S*: indep, arch,
/// nonparam; Tiv: instr_homo, instr_general; Delta: subsample).
bool method_applies(Statistic s, VarMethod m);

struct TestRequest {
  Statistic statistic;
  int k;
  VarMethod method;
};

struct EvalOptions {
  int draws = 10000;
  double alpha = 0.05;
  std::optional<int> k_star;       // default T-2
  std::optional<int> subsample_m;  // default floor(n/4)
  int subsample_B = 1000;
};

/// One tested cell. `value` is on the scale of its null law: sqrt(n) S(k),
/// S*(k), n T(k), or Delta_k.
struct TestOutcome {
  TestRequest request;
  double value = 0.0;
  double critical_value = 0.0;
  double p_value = 1.0;
  int draws = 0;
  Warnings warnings;

  bool reject(double alpha) const {
    return request.statistic == Statistic::Delta ? value > critical_value : p_value <= alpha;
  }
};

/// Evaluates every request on one data set. Requests sharing (k, method) for
/// S and S* share the fit and the simulated draws. Deterministic in seed.
std::vector<TestOutcome> evaluate_tests(const stats::PanelData& panel,
                                        const stats::InstrumentPanel* instruments,
                                        const std::vector<TestRequest>& requests, const EvalOptions& options,
                                        std::uint64_t seed);

struct SweepConfig {
  int k_min = 0;
  int k_max = 0;
  std::vector<Statistic> statistics{Statistic::S};
  std::vector<VarMethod> methods{VarMethod::Indep, VarMethod::InstrGeneral};
  EvalOptions options;
  std::uint64_t seed = 1;
};

struct EigenRow {
  std::string matrix;  // "V_y" or "V_xi"
  int index;           // 1-based
  double eigenvalue;
  double spacing;      // delta_j - delta_{j+1} (nan for the last)
  double ratio;        // spacing_j / spacing_{j+1} (nan where undefined)
};

struct TestReport {
  std::vector<TestOutcome> rows;
  std::vector<EigenRow> eigenvalues;
  Warnings notes;  // cells skipped because the statistic is undefined there
  double alpha = 0.05;
};

/// Builds the request list for a sweep (skipping undefined cells with a note)
/// and evaluates it.
TestReport run_test_sweep(const SweepConfig& config, const stats::PanelData& panel,
                          const stats::InstrumentPanel* instruments);

/// Writes pvalues.csv, eigenvalues.csv and manifest.json into outdir.
void write_report(const TestReport& report, const std::filesystem::path& outdir);

}  // namespace shortpanel::cli
