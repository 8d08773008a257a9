#include "predset/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include "predset/csv.hpp"
#include "predset/errors.hpp"

namespace predset {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size() && !text.empty();
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& name) {
  Config cfg;
  cfg.name_ = name;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(name, line, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    if (key.empty()) throw ParseError(name, line, "empty key");
    if (cfg.entries_.count(key)) throw ParseError(name, line, "duplicate key '" + key + "'");
    cfg.entries_[key] = {trim(text.substr(eq + 1)), line};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  Config cfg = parse(in, path.string());
  cfg.base_dir_ = path.parent_path();
  return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

const Config::Entry* Config::find(const std::string& key) const {
  used_.insert(key);
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void Config::fail(const std::string& key, const Entry& entry, const std::string& what) const {
  if (entry.line == 0) throw UsageError("override " + key + ": " + what);
  throw ParseError(name_, entry.line, key + ": " + what);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  double v = 0.0;
  if (!parse_number(e->value, v)) fail(key, *e, "not a number: '" + e->value + "'");
  return v;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::size_t v = 0;
  if (!parse_number(e->value, v)) fail(key, *e, "not a non-negative integer: '" + e->value + "'");
  return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::uint64_t v = 0;
  if (!parse_number(e->value, v)) fail(key, *e, "not a non-negative integer: '" + e->value + "'");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  fail(key, *e, "not a boolean: '" + e->value + "'");
}

std::vector<std::string> Config::get_strings(const std::string& key,
                                             const std::vector<std::string>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value.empty()) return {};
  return split_csv_line(e->value);
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const auto& item : get_strings(key, {})) {
    double v = 0.0;
    if (!parse_number(item, v)) fail(key, *e, "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> Config::get_sizes(const std::string& key,
                                           const std::vector<std::size_t>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<std::size_t> out;
  for (const auto& item : get_strings(key, {})) {
    std::size_t v = 0;
    if (!parse_number(item, v)) fail(key, *e, "not a non-negative integer: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::filesystem::path Config::get_path(const std::string& key,
                                       const std::filesystem::path& fallback) const {
  const Entry* e = find(key);
  std::filesystem::path p = e ? std::filesystem::path(e->value) : fallback;
  if (p.empty() || p.is_absolute()) return p;
  return base_dir_ / p;
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    if (!used_.count(key)) out.push_back(key);
  }
  return out;
}

}  // namespace predset
