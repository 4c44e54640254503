#include "tailmix/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <string_view>

#include "tailmix/error.hpp"

namespace tailmix {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvSeries read_series_csv(std::istream& in) {
  CsvSeries out;
  std::string line;
  std::size_t columns = 0, line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    const std::string where = "csv line " + std::to_string(line_no);
    require(fields.size() == 1 || fields.size() == 2, ErrorKind::Io,
            where + ": expected 1 or 2 columns, got " + std::to_string(fields.size()));
    if (columns == 0) columns = fields.size();
    require(fields.size() == columns, ErrorKind::Io, where + ": inconsistent column count");
    const auto value = parse_number(fields.back());
    if (!value) {
      require(first, ErrorKind::Io,
              where + ": non-numeric value '" + std::string(trim(fields.back())) + "'");
      first = false;  // header row
      continue;
    }
    first = false;
    out.values.push_back(*value);
    if (columns == 2) out.labels.emplace_back(trim(fields.front()));
  }
  require(!out.values.empty(), ErrorKind::EmptySample, "csv: no numeric rows");
  return out;
}

CsvSeries read_series_csv_file(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::Io, "cannot open '" + path + "'");
  return read_series_csv(f);
}

}  // namespace tailmix
