#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "donorline/error.hpp"
#include "donorline/spectrum.hpp"
#include "donorline/thermal.hpp"
#include "donorline/units.hpp"

namespace donorline {

enum class Schema { ple, transmission, temperature_series };

constexpr std::string_view to_string(Schema s) noexcept {
  switch (s) {
    case Schema::ple: return "ple";
    case Schema::transmission: return "transmission";
    case Schema::temperature_series: return "temperature_series";
  }
  return "?";
}

struct Column {
  std::string name;
  std::string unit;
};

struct LoadedData {
  Schema schema = Schema::ple;
  Spectrum spectrum;                       // ple, transmission
  std::vector<TemperaturePoint> points;    // temperature_series (fwhm in GHz)
  std::vector<Column> columns;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string at_line(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

inline Column parse_header_cell(std::string_view cell, std::string_view source, std::size_t line) {
  const auto open = cell.find('(');
  const auto close = cell.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error(ErrorCode::UnitError, at_line(source, line) + "column '" + std::string(cell) + "' has no unit");
  }
  Column c{std::string(trim(cell.substr(0, open))), std::string(trim(cell.substr(open + 1, close - open - 1)))};
  if (c.unit.empty()) throw Error(ErrorCode::UnitError, at_line(source, line) + "empty unit in '" + std::string(cell) + "'");
  return c;
}

inline double parse_number(std::string_view cell, std::string_view source, std::size_t line) {
  double v = 0.0;
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::ParseError, at_line(source, line) + "'" + std::string(cell) + "' is not a number");
  }
  return v;
}

inline Unit energy_unit(const Column& c, std::string_view source, std::size_t line, bool allow_kelvin = false) {
  const Unit u = parse_unit(c.unit);
  if (u == Unit::GHz || u == Unit::meV || (allow_kelvin && u == Unit::K)) return u;
  throw Error(ErrorCode::UnitError, at_line(source, line) + "column '" + c.name + "' needs GHz or meV, got '" +
                                        c.unit + "'");
}

}  // namespace detail

/// Parses CSV text: header "name (unit), ...", '#' comments, 2 or 3 numeric
/// columns (the third is a per-point sigma in the unit of the second).
inline LoadedData parse_csv(std::string_view text, Schema schema, std::string_view source = "<input>") {
  LoadedData out;
  out.schema = schema;
  struct Row {
    double x, y, s;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::size_t line_no = 0, header_line = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto cells = detail::split_commas(line);
    if (!have_header) {
      if (cells.size() < 2 || cells.size() > 3) {
        throw Error(ErrorCode::ParseError, detail::at_line(source, line_no) + "expected 2 or 3 columns, got " +
                                               std::to_string(cells.size()));
      }
      for (auto c : cells) out.columns.push_back(detail::parse_header_cell(c, source, line_no));
      have_header = true;
      header_line = line_no;
      continue;
    }
    if (cells.size() != out.columns.size()) {
      throw Error(ErrorCode::ParseError, detail::at_line(source, line_no) + "expected " +
                                             std::to_string(out.columns.size()) + " fields, got " +
                                             std::to_string(cells.size()));
    }
    Row r{detail::parse_number(cells[0], source, line_no), detail::parse_number(cells[1], source, line_no), 0.0,
          line_no};
    if (cells.size() == 3) {
      r.s = detail::parse_number(cells[2], source, line_no);
      if (!(r.s > 0)) throw Error(ErrorCode::ParseError, detail::at_line(source, line_no) + "sigma must be positive");
    }
    rows.push_back(r);
  }
  if (!have_header) throw Error(ErrorCode::ParseError, std::string(source) + ": empty file");
  if (rows.empty()) throw Error(ErrorCode::ParseError, std::string(source) + ": no data rows");

  const Unit x_unit = schema == Schema::temperature_series ? parse_unit(out.columns[0].unit)
                                                           : detail::energy_unit(out.columns[0], source, header_line);
  if (schema == Schema::temperature_series && x_unit != Unit::K) {
    throw Error(ErrorCode::UnitError, detail::at_line(source, header_line) + "temperature column needs K");
  }

  if (!std::is_sorted(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.x < b.x; })) {
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.x < b.x; });
    out.warnings.push_back(std::string(source) + ": abscissa not monotonic; rows sorted");
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].x == rows[i - 1].x) {
      throw Error(ErrorCode::ParseError, detail::at_line(source, std::max(rows[i].line, rows[i - 1].line)) +
                                             "duplicate abscissa value " + std::to_string(rows[i].x) +
                                             " (also on line " +
                                             std::to_string(std::min(rows[i].line, rows[i - 1].line)) + ")");
    }
  }
  const bool with_sigma = out.columns.size() == 3;

  if (schema == Schema::temperature_series) {
    const Unit w_unit = detail::energy_unit(out.columns[1], source, header_line);
    for (const auto& r : rows) {
      TemperaturePoint p;
      p.t_k = r.x;
      p.fwhm_ghz = convert({r.y, w_unit}, Unit::GHz).value;
      if (with_sigma) p.sigma_ghz = convert({r.s, w_unit}, Unit::GHz).value;
      out.points.push_back(p);
    }
    return out;
  }
  if (schema == Schema::transmission) {
    const Unit t_unit = parse_unit(out.columns[1].unit);
    if (t_unit != Unit::dimensionless) {
      throw Error(ErrorCode::UnitError, detail::at_line(source, header_line) + "transmission column must be dimensionless");
    }
  }
  out.spectrum.x_unit = x_unit;
  out.spectrum.y_label = out.columns[1].name;
  for (const auto& r : rows) {
    out.spectrum.x.push_back(r.x);
    out.spectrum.y.push_back(r.y);
    if (with_sigma) out.spectrum.sigma.push_back(r.s);
  }
  out.spectrum.validate();
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LoadedData load_spectrum(const std::string& path, Schema schema) {
  return parse_csv(read_file(path), schema, path);
}

/// Lowercase hex SHA-256.
inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::InvalidArgument, "SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

/// Two- or three-column CSV in the loader's format.
inline void write_spectrum_csv(std::ostream& os, const Spectrum& s, const std::string& y_unit = "1") {
  os << "x (" << to_string(s.x_unit) << ")," << s.y_label << " (" << y_unit << ")";
  if (s.has_sigma()) os << ",sigma (" << y_unit << ")";
  os << '\n';
  os.precision(12);
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << s.x[i] << ',' << s.y[i];
    if (s.has_sigma()) os << ',' << s.sigma[i];
    os << '\n';
  }
}

}  // namespace donorline
