#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "shortpanel/densities.hpp"

namespace shortpanel::cli {

/// manifest.json: every emitted file with its column meanings.
class Manifest {
 public:
  using Columns = std::vector<std::pair<std::string, std::string>>;

  void add(const std::string& file, const std::string& description, Columns columns);
  void note(const std::string& text) { notes_.push_back(text); }
  void write(const std::filesystem::path& outdir) const;

 private:
  struct Entry {
    std::string file;
    std::string description;
    Columns columns;
  };
  std::vector<Entry> entries_;
  std::vector<std::string> notes_;
};

void ensure_directory(const std::filesystem::path& dir);

/// Columns a, power.
void write_power_curve(const densities::PowerCurve& curve, const std::filesystem::path& file);

enum class DensityFamily { F2, F3, G3, Goe3Joint };

DensityFamily parse_density_family(const std::string& s);
std::string to_string(DensityFamily f);

/// Columns x, pdf, cdf on `points` equally spaced values in [0, x_max].
void write_density_1d(DensityFamily family, double x_max, int points, const std::filesystem::path& file);

/// Columns s1, s2, pdf on a grid_size x grid_size grid over [0, s_max]^2.
void write_density_joint(double s_max, int grid_size, const std::filesystem::path& file);

}  // namespace shortpanel::cli
