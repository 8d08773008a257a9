#pragma once

#include <stdexcept>
#include <string>

namespace predset {

/// Caller violated a documented precondition (bad index, empty input, parameter out of range).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An incremental search ran past its configured upper limit without finding a solution.
class CeilingReached : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expert-prediction data contains no observation for some true label.
class UnobservedClass : public std::runtime_error {
 public:
  UnobservedClass(int label, const std::string& context)
      : std::runtime_error("unobserved class " + std::to_string(label) +
                           (context.empty() ? "" : " (" + context + ")")),
        label_(label) {}
  int label() const noexcept { return label_; }

 private:
  int label_;
};

/// Malformed input file; carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

}  // namespace predset
