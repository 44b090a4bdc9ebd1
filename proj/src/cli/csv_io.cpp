#include "shortpanel/cli/csv_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace shortpanel::cli {

using linalg::Matrix;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits one CSV record, honouring double-quoted fields.
std::vector<std::string> split_record(const std::string& line, const std::string& where) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw IngestError(where + ": unterminated quoted field");
  cells.push_back(trim(cur));
  return cells;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::filesystem::path& path, const char* expect) {
  std::ifstream in(path);
  if (!in) throw IngestError(path.string() + ": cannot open file");
  const std::string file = path.string();

  Table tab;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string where = file + ":" + std::to_string(lineno);
    if (tab.header.empty()) {
      if (trim(line).empty()) throw IngestError(where + ": empty header row");
      tab.header = split_record(line, where);
      if (tab.header.size() < 2) throw IngestError(where + ": header needs asset_id and at least one " + expect + " column");
      if (tab.header[0] != "asset_id") throw IngestError(where + ": first header column must be asset_id");
      continue;
    }
    if (trim(line).empty()) continue;  // trailing blank lines
    const std::vector<std::string> cells = split_record(line, where);
    if (cells.size() != tab.header.size())
      throw IngestError(where + ": expected " + std::to_string(tab.header.size()) + " columns, found " +
                        std::to_string(cells.size()));
    if (cells[0].empty()) throw IngestError(where + ": missing asset_id");
    if (!seen.insert(cells[0]).second) throw IngestError(where + ": duplicate asset_id '" + cells[0] + "'");

    std::vector<double> values(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      const std::string col = "column " + std::to_string(c + 1) + " (" + tab.header[c] + ")";
      if (cell.empty()) throw IngestError(where + ": missing value in " + col);
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
        throw IngestError(where + ": non-numeric value '" + cell + "' in " + col);
      values[c - 1] = v;
    }
    tab.ids.push_back(cells[0]);
    tab.rows.push_back(std::move(values));
  }
  if (tab.header.empty()) throw IngestError(file + ": empty file");
  return tab;
}

Matrix to_matrix(const Table& tab) {
  Matrix m(static_cast<Eigen::Index>(tab.rows.size()), static_cast<Eigen::Index>(tab.header.size() - 1));
  for (std::size_t i = 0; i < tab.rows.size(); ++i)
    for (std::size_t j = 0; j < tab.rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = tab.rows[i][j];
  return m;
}

}  // namespace

LoadedPanel load_panel(const std::filesystem::path& path) {
  Table tab = read_table(path, "period");
  try {
    stats::PanelData data(to_matrix(tab));
    std::vector<std::string> periods(tab.header.begin() + 1, tab.header.end());
    return LoadedPanel{std::move(tab.ids), std::move(periods), std::move(data)};
  } catch (const InvalidInput& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
}

stats::InstrumentPanel load_instruments(const std::filesystem::path& path, const LoadedPanel& panel) {
  Table tab = read_table(path, "instrument");
  std::map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < tab.ids.size(); ++i) where[tab.ids[i]] = i;

  std::set<std::string> panel_ids(panel.asset_ids.begin(), panel.asset_ids.end());
  std::vector<std::string> diff;
  for (const auto& id : panel.asset_ids)
    if (!where.count(id)) diff.push_back(id + " (panel only)");
  for (const auto& id : tab.ids)
    if (!panel_ids.count(id)) diff.push_back(id + " (instruments only)");
  if (!diff.empty()) {
    std::string msg = path.string() + ": asset ids differ from the panel in " + std::to_string(diff.size()) + " case(s): ";
    for (std::size_t i = 0; i < std::min<std::size_t>(diff.size(), 10); ++i) msg += (i ? ", " : "") + diff[i];
    if (diff.size() > 10) msg += ", ...";
    throw IngestError(msg);
  }

  const Matrix raw = to_matrix(tab);
  Matrix z(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < panel.asset_ids.size(); ++i)
    z.row(static_cast<Eigen::Index>(i)) = raw.row(static_cast<Eigen::Index>(where.at(panel.asset_ids[i])));
  try {
    return stats::InstrumentPanel(std::move(z));
  } catch (const InvalidInput& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw Error(path.string() + ": cannot open for writing");
}

CsvWriter& CsvWriter::field(const std::string& s) {
  if (!first_) out_ << ',';
  first_ = false;
  if (s.find_first_of(",\"\r\n") == std::string::npos) {
    out_ << s;
  } else {
    out_ << '"';
    for (const char ch : s) {
      if (ch == '"') out_ << '"';
      out_ << ch;
    }
    out_ << '"';
  }
  return *this;
}

CsvWriter& CsvWriter::field(double x) { return field(format_double(x)); }

CsvWriter& CsvWriter::field(long long x) { return field(std::to_string(x)); }

void CsvWriter::end_row() {
  out_ << "\r\n";
  first_ = true;
  if (!out_) throw Error(path_.string() + ": write failed");
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (const auto& c : cells) field(c);
  end_row();
}

}  // namespace shortpanel::cli
