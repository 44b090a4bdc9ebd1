#include "shortpanel/cli/montecarlo.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "shortpanel/cli/csv_io.hpp"
#include "shortpanel/cli/plot_data.hpp"

namespace shortpanel::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r' && ch != ' ' && ch != '\t' && ch != '"') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

constexpr std::uint64_t kSimSalt = 0x6a09e667f3bcc909ULL;

}  // namespace

std::vector<GridPoint> load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(path.string() + ": cannot open grid file");
  std::string line;
  std::vector<std::string> header;
  std::vector<GridPoint> grid;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (header.empty()) {
      header = cells;
      bool has_n = false;
      for (const auto& h : header) {
        if (h != "n" && h != "T" && h != "kappa" && h != "c")
          throw IngestError(where + ": unknown grid column '" + h + "' (expected n, T, kappa, c)");
        has_n = has_n || h == "n";
      }
      if (!has_n) throw IngestError(where + ": grid needs an n column");
      continue;
    }
    if (cells.size() != header.size())
      throw IngestError(where + ": expected " + std::to_string(header.size()) + " columns");
    GridPoint g;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      char* end = nullptr;
      const double v = std::strtod(cells[j].c_str(), &end);
      if (cells[j].empty() || end != cells[j].c_str() + cells[j].size())
        throw IngestError(where + ": non-numeric value '" + cells[j] + "'");
      if (header[j] == "n") g.n = static_cast<int>(v);
      if (header[j] == "T") g.T = static_cast<int>(v);
      if (header[j] == "kappa") g.kappa = v;
      if (header[j] == "c") g.c = v;
    }
    grid.push_back(g);
  }
  if (grid.empty()) throw IngestError(path.string() + ": grid has no rows");
  return grid;
}

dgp::DgpConfig make_dgp_config(int dgp_index, const GridPoint& g) {
  dgp::DgpConfig cfg;
  switch (dgp_index) {
    case 1: {
      dgp::Dgp1 m;
      m.n = g.n;
      if (g.T > 0) m.T = g.T;
      cfg.model = m;
      break;
    }
    case 2: {
      dgp::Dgp2 m;
      m.n = g.n;
      if (g.T > 0) m.T = g.T;
      m.kappa = g.kappa;
      m.c = g.c;
      cfg.model = m;
      break;
    }
    case 3: {
      dgp::Dgp3 m;
      m.n = g.n;
      if (g.T > 0) m.T = g.T;
      m.kappa = g.kappa;
      m.c = g.c;
      cfg.model = m;
      break;
    }
    case 4: {
      dgp::Dgp4 m;
      m.n = g.n;
      if (g.T > 0) m.T = g.T;
      cfg.model = m;
      break;
    }
    default:
      throw InvalidInput("unknown DGP " + std::to_string(dgp_index) + " (expected 1-4)");
  }
  cfg.validate();
  return cfg;
}

std::vector<TestRequest> default_requests(const dgp::DgpConfig& config, const std::vector<Statistic>& statistics,
                                          const std::vector<VarMethod>& methods) {
  const int k = config.k();
  const int idx = config.index();
  std::vector<int> ks = (idx == 1 || idx == 4) ? std::vector<int>{k, k - 1} : std::vector<int>{2};

  std::vector<Statistic> stats_sel = statistics;
  if (stats_sel.empty())
    stats_sel = idx == 4 ? std::vector<Statistic>{Statistic::Tiv} : std::vector<Statistic>{Statistic::S, Statistic::SStar};
  std::vector<VarMethod> meth = methods;
  if (meth.empty()) {
    if (idx == 4)
      meth = {VarMethod::InstrHomo, VarMethod::InstrGeneral};
    else
      meth = {idx == 3 ? VarMethod::Arch : VarMethod::Indep};
  }

  std::vector<TestRequest> out;
  for (const Statistic s : stats_sel) {
    if (s == Statistic::Tiv && idx != 4) throw InvalidInput("Tiv needs instruments (DGP4)");
    if (s == Statistic::Delta) {
      out.push_back({s, 3, VarMethod::Subsample});
      continue;
    }
    bool any = false;
    for (const int kk : ks) {
      if (s == Statistic::SStar && config.T() - kk < 3) continue;
      for (const VarMethod m : meth) {
        if (!method_applies(s, m)) continue;
        out.push_back({s, kk, m});
        any = true;
      }
    }
    if (!any && !(s == Statistic::SStar))
      throw InvalidInput("no selected variance method applies to " + to_string(s));
  }
  return out;
}

std::vector<CellResult> run_montecarlo_cell(const dgp::DgpConfig& config, const std::vector<TestRequest>& requests,
                                            int reps, int paths, const EvalOptions& options, std::uint64_t seed) {
  if (reps < 1 || paths < 1) throw InvalidParameter("montecarlo: reps and paths must be positive");
  const std::size_t nreq = requests.size();
  std::vector<std::vector<double>> rates(nreq);

  for (int p = 0; p < paths; ++p) {
    const std::uint64_t base = static_cast<std::uint64_t>(p) << 32;
    Rng design_rng = make_stream(seed, base);
    const dgp::DgpDesign design = dgp::draw_design(config, design_rng);
    std::vector<int> rejections(nreq, 0);
    for (int r = 0; r < reps; ++r) {
      const std::uint64_t stream = base + static_cast<std::uint64_t>(r) + 1;
      Rng rng = make_stream(seed, stream);
      const dgp::DgpDraw draw = dgp::generate(design, rng);
      const stats::InstrumentPanel* instr = draw.instruments ? &*draw.instruments : nullptr;
      const auto outcomes = evaluate_tests(draw.panel, instr, requests, options, derive_seed(seed ^ kSimSalt, stream));
      for (std::size_t j = 0; j < nreq; ++j)
        if (outcomes[j].reject(options.alpha)) ++rejections[j];
    }
    for (std::size_t j = 0; j < nreq; ++j) rates[j].push_back(100.0 * rejections[j] / reps);
  }

  std::vector<CellResult> out;
  for (std::size_t j = 0; j < nreq; ++j) {
    CellResult c;
    c.request = requests[j];
    c.reps = reps;
    c.paths = paths;
    double mean = 0.0;
    for (const double v : rates[j]) mean += v;
    mean /= paths;
    double var = 0.0;
    for (const double v : rates[j]) var += (v - mean) * (v - mean);
    c.rejection_pct = mean;
    c.sd_paths_pct = paths > 1 ? std::sqrt(var / (paths - 1)) : 0.0;
    out.push_back(c);
  }
  return out;
}

std::vector<MonteCarloRow> run_montecarlo(const MonteCarloConfig& config) {
  if (config.grid.empty()) throw InvalidInput("montecarlo: empty grid");
  std::vector<MonteCarloRow> rows;
  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    const dgp::DgpConfig cfg = make_dgp_config(config.dgp, config.grid[g]);
    const auto requests = default_requests(cfg, config.statistics, config.methods);
    const auto cells = run_montecarlo_cell(cfg, requests, config.reps, config.paths, config.options,
                                           derive_seed(config.seed, g));
    for (const auto& c : cells) {
      GridPoint gp = config.grid[g];
      gp.T = cfg.T();
      rows.push_back({config.dgp, gp, c});
    }
  }
  return rows;
}

void write_montecarlo(const std::vector<MonteCarloRow>& rows, const std::filesystem::path& outdir) {
  ensure_directory(outdir);
  {
    CsvWriter csv(outdir / "montecarlo.csv");
    csv.row({"dgp", "n", "T", "kappa", "c", "statistic", "k", "method", "reps", "paths", "rejection_pct",
             "sd_paths_pct"});
    for (const auto& r : rows) {
      csv.field(r.dgp).field(r.grid.n).field(r.grid.T).field(r.grid.kappa).field(r.grid.c);
      csv.field(to_string(r.cell.request.statistic)).field(r.cell.request.k).field(to_string(r.cell.request.method));
      csv.field(r.cell.reps).field(r.cell.paths).field(r.cell.rejection_pct).field(r.cell.sd_paths_pct);
      csv.end_row();
    }
  }
  Manifest manifest;
  manifest.add("montecarlo.csv", "rejection frequencies in percent at the nominal level",
               {{"dgp", "data-generating process 1-4"},
                {"n", "cross-section size"},
                {"T", "number of periods"},
                {"kappa", "loading decay exponent (DGP2/DGP3)"},
                {"c", "loading scale (DGP2/DGP3)"},
                {"statistic", "S, Sstar, Tiv or Delta"},
                {"k", "number of factors under the tested null"},
                {"method", "variance method for the null law"},
                {"reps", "repetitions per factor path"},
                {"paths", "number of fixed factor paths"},
                {"rejection_pct", "rejection frequency in percent, averaged over paths"},
                {"sd_paths_pct", "standard deviation of the per-path rejection frequencies"}});
  manifest.write(outdir);
}

}  // namespace shortpanel::cli
