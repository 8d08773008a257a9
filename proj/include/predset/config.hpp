#pragma once

// `key = value` configuration files. '#' starts a comment; lists are comma-separated.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace predset {

class Config {
 public:
  Config() = default;
  static Config parse(std::istream& in, const std::string& name);
  /// Throws UsageError when the file cannot be opened, ParseError on malformed lines.
  static Config load(const std::filesystem::path& path);

  const std::string& name() const noexcept { return name_; }
  /// Directory of the loaded file; relative paths inside it resolve against this.
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

  bool has(const std::string& key) const;
  /// Later calls override earlier values (CLI overrides).
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key,
                                     const std::vector<std::size_t>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key,
                                       const std::vector<std::string>& fallback) const;
  std::filesystem::path get_path(const std::string& key, const std::filesystem::path& fallback) const;

  /// Keys present in the file that no getter asked for (likely typos).
  std::vector<std::string> unused_keys() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;  // 0 for programmatic overrides
  };
  const Entry* find(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const Entry& entry, const std::string& what) const;

  std::string name_ = "<config>";
  std::filesystem::path base_dir_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace predset
