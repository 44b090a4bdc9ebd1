#include "shortpanel/cli/plot_data.hpp"

#include <fstream>

#include <json.hpp>

#include "shortpanel/cli/csv_io.hpp"

namespace shortpanel::cli {

void Manifest::add(const std::string& file, const std::string& description, Columns columns) {
  entries_.push_back(Entry{file, description, std::move(columns)});
}

void Manifest::write(const std::filesystem::path& outdir) const {
  nlohmann::ordered_json doc;
  doc["files"] = nlohmann::ordered_json::array();
  for (const auto& e : entries_) {
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (const auto& [name, meaning] : e.columns) cols.push_back({{"name", name}, {"meaning", meaning}});
    doc["files"].push_back({{"file", e.file}, {"description", e.description}, {"columns", cols}});
  }
  if (!notes_.empty()) doc["notes"] = notes_;
  const auto path = outdir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw Error(path.string() + ": write failed");
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(dir.string() + ": cannot create directory (" + ec.message() + ")");
}

void write_power_curve(const densities::PowerCurve& curve, const std::filesystem::path& file) {
  CsvWriter csv(file);
  csv.row({"a", "power"});
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    csv.field(curve.grid[i]).field(curve.power[i]);
    csv.end_row();
  }
}

DensityFamily parse_density_family(const std::string& s) {
  if (s == "f2") return DensityFamily::F2;
  if (s == "f3") return DensityFamily::F3;
  if (s == "g3") return DensityFamily::G3;
  if (s == "goe3joint") return DensityFamily::Goe3Joint;
  throw InvalidInput("unknown density family '" + s + "' (expected f2, f3, g3 or goe3joint)");
}

std::string to_string(DensityFamily f) {
  switch (f) {
    case DensityFamily::F2: return "f2";
    case DensityFamily::F3: return "f3";
    case DensityFamily::G3: return "g3";
    case DensityFamily::Goe3Joint: return "goe3joint";
  }
  return "?";
}

void write_density_1d(DensityFamily family, double x_max, int points, const std::filesystem::path& file) {
  if (family == DensityFamily::Goe3Joint) throw InvalidInput("write_density_1d: goe3joint is two-dimensional");
  if (!(x_max > 0.0) || points < 2) throw InvalidInput("density grid needs x_max > 0 and at least 2 points");
  CsvWriter csv(file);
  csv.row({"x", "pdf", "cdf"});
  for (int i = 0; i < points; ++i) {
    const double x = x_max * i / (points - 1);
    double pdf = 0.0, cdf = 0.0;
    switch (family) {
      case DensityFamily::F2:
        pdf = densities::wigner_surmise_pdf(x);
        cdf = densities::wigner_surmise_cdf(x);
        break;
      case DensityFamily::F3:
        pdf = densities::goe3_total_spacing_pdf(x);
        cdf = densities::goe3_total_spacing_cdf(x);
        break;
      default:
        pdf = densities::goe3_spacing_ratio_pdf(x);
        cdf = densities::goe3_spacing_ratio_cdf(x);
        break;
    }
    csv.field(x).field(pdf).field(cdf);
    csv.end_row();
  }
}

void write_density_joint(double s_max, int grid_size, const std::filesystem::path& file) {
  if (!(s_max > 0.0) || grid_size < 2) throw InvalidInput("joint density grid needs s_max > 0 and size >= 2");
  CsvWriter csv(file);
  csv.row({"s1", "s2", "pdf"});
  for (int i = 0; i < grid_size; ++i) {
    const double s1 = s_max * i / (grid_size - 1);
    for (int j = 0; j < grid_size; ++j) {
      const double s2 = s_max * j / (grid_size - 1);
      csv.field(s1).field(s2).field(densities::goe3_joint_spacing_pdf(s1, s2));
      csv.end_row();
    }
  }
}

}  // namespace shortpanel::cli
