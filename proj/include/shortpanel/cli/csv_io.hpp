#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "shortpanel/stats.hpp"

namespace shortpanel::cli {

struct LoadedPanel {
  std::vector<std::string> asset_ids;
  std::vector<std::string> period_labels;
  stats::PanelData data;
};

/// CSV with header `asset_id,t1,...,tT`, one row per asset.
LoadedPanel load_panel(const std::filesystem::path& path);

/// CSV with header `asset_id,z1,...,zK`; rows are reordered to match the panel.
stats::InstrumentPanel load_instruments(const std::filesystem::path& path, const LoadedPanel& panel);

/// Shortest decimal form that round-trips a double ("%.17g"); inf/nan spelled out.
std::string format_double(double x);

/// RFC-4180 writer: fields containing separators, quotes or newlines are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  CsvWriter& field(const std::string& s);
  CsvWriter& field(double x);
  CsvWriter& field(long long x);
  CsvWriter& field(int x) { return field(static_cast<long long>(x)); }
  void end_row();
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  bool first_ = true;
};

}  // namespace shortpanel::cli
