#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tailmix {

/// Round-trip decimal form (17 significant digits). nan and +-inf are
/// written as "nan", "inf", "-inf".
std::string format_number(double x);

/// One numeric column, or (label, value) pairs.
struct CsvSeries {
  std::vector<double> values;
  std::vector<std::string> labels;  ///< empty for one-column input
};

/// Reads one- or two-column CSV. The first row is a header when its value
/// field is not a number. Blank lines are ignored.
CsvSeries read_series_csv(std::istream& in);
CsvSeries read_series_csv_file(const std::string& path);

}  // namespace tailmix
