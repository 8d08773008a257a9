#pragma once

// Minimal comma-separated I/O shared by the dataset, real-data and report writers.
// No quoting: fields never contain commas in the formats used here.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "predset/expert.hpp"

namespace predset {

/// Shortest decimal that round-trips to the same double ("nan", "inf" for specials).
std::string format_double(double value);

/// Reads a CSV with a header row. Blank lines are skipped; surrounding whitespace and
/// trailing '\r' are stripped. Errors carry the 1-based line number.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string name);

  /// Reads the header; throws ParseError on an empty file.
  std::vector<std::string> header();
  /// False at end of input.
  bool next(std::vector<std::string>& fields);

  std::size_t line() const noexcept { return line_; }
  const std::string& name() const noexcept { return name_; }
  [[noreturn]] void fail(const std::string& what) const;

  double to_double(std::string_view field) const;
  long to_int(std::string_view field) const;

 private:
  std::istream& in_;
  std::string name_;
  std::size_t line_ = 0;
};

std::vector<std::string> split_csv_line(std::string_view line);

/// Buffered writer that formats doubles with format_double.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  CsvWriter& operator<<(double value);
  CsvWriter& operator<<(std::size_t value);
  CsvWriter& operator<<(int value);
  CsvWriter& operator<<(const std::string& value);
  CsvWriter& operator<<(const char* value) { return *this << std::string(value); }
  /// Terminates the current row; throws UsageError if its width differs from the header.
  void end_row();

 private:
  void sep();
  std::ostream& out_;
  std::size_t width_;
  std::size_t column_ = 0;
};

/// Header-free n x n CSV; one row per true label.
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& confusion);
ConfusionMatrix read_confusion_csv(std::istream& in, const std::string& name);

}  // namespace predset
