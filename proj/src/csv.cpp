#include "predset/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "predset/errors.hpp"

namespace predset {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto field = trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

CsvReader::CsvReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

std::vector<std::string> CsvReader::header() {
  std::vector<std::string> fields;
  if (!next(fields)) throw ParseError(name_, 1, "missing header row");
  return fields;
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string raw;
  while (std::getline(in_, raw)) {
    ++line_;
    if (trim(raw).empty()) continue;
    fields = split_csv_line(raw);
    return true;
  }
  return false;
}

void CsvReader::fail(const std::string& what) const { throw ParseError(name_, line_, what); }

double CsvReader::to_double(std::string_view field) const {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty()) {
    fail("not a number: '" + std::string(field) + "'");
  }
  return v;
}

long CsvReader::to_int(std::string_view field) const {
  long v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty()) {
    fail("not an integer: '" + std::string(field) + "'");
  }
  return v;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::sep() {
  if (column_++) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double value) {
  sep();
  out_ << format_double(value);
  return *this;
}
CsvWriter& CsvWriter::operator<<(std::size_t value) {
  sep();
  out_ << value;
  return *this;
}
CsvWriter& CsvWriter::operator<<(int value) {
  sep();
  out_ << value;
  return *this;
}
CsvWriter& CsvWriter::operator<<(const std::string& value) {
  sep();
  out_ << value;
  return *this;
}

void CsvWriter::end_row() {
  if (column_ != width_) {
    throw UsageError("CSV row has " + std::to_string(column_) + " fields, header has " +
                     std::to_string(width_));
  }
  out_ << '\n';
  column_ = 0;
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& confusion) {
  for (std::size_t y = 0; y < confusion.size(); ++y) {
    const auto row = confusion.row(y);
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_double(row[k]);
    out << '\n';
  }
}

ConfusionMatrix read_confusion_csv(std::istream& in, const std::string& name) {
  CsvReader reader(in, name);
  std::vector<double> entries;
  std::vector<std::string> fields;
  std::size_t n = 0, rows = 0;
  while (reader.next(fields)) {
    if (rows == 0) n = fields.size();
    if (fields.size() != n) reader.fail("expected " + std::to_string(n) + " fields");
    for (const auto& f : fields) entries.push_back(reader.to_double(f));
    ++rows;
  }
  if (rows == 0) throw ParseError(name, 1, "empty confusion matrix");
  if (rows != n) throw ParseError(name, reader.line(), "confusion matrix is not square");
  try {
    return ConfusionMatrix(n, std::move(entries));
  } catch (const UsageError& e) {
    throw ParseError(name, reader.line(), e.what());
  }
}

}  // namespace predset
