#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hotspot::csv {

/// Header-first comma separated table held as strings. No quoting beyond stripping
/// surrounding double quotes; the file formats we read never embed commas in fields.
class Table {
 public:
  static Table read(const std::filesystem::path& path);
  static Table parse(std::string_view text, std::string source = "<memory>");

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }

  /// Index of a column, throws DataError if absent.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parses a double; empty / NA / NaN fields yield nullopt. Throws DataError on garbage.
std::optional<double> parse_optional_double(std::string_view field);
double parse_double(std::string_view field, std::string_view context);
long long parse_int(std::string_view field, std::string_view context);

/// Shortest text that is still 17 significant digits; deterministic across runs.
std::string format_double(double value);

/// Writes comma separated rows. Opens the file eagerly and throws DataError on failure.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  void row(const std::vector<std::string>& fields);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

}  // namespace hotspot::csv
