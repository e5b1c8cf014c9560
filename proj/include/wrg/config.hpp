#pragma once

// Flat key=value configuration text.
//
// Grammar: tokens of the form key=value separated by whitespace or newlines.
// A '#' starts a comment that runs to the end of the line. Keys consist of
// [A-Za-z0-9_]; values are any non-whitespace text. A repeated key replaces
// the earlier value. Numbers are written in shortest round-trip form.

#include <charconv>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "errors.hpp"

namespace wrg {

class KeyValues {
 public:
  static KeyValues parse(std::string_view text) {
    KeyValues kv;
    std::istringstream lines{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream tokens(line);
      std::string tok;
      while (tokens >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw DomainError("config line " + std::to_string(lineno) + ": expected key=value, got '" +
                            tok + "'");
        }
        std::string key = tok.substr(0, eq);
        for (char c : key) {
          bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
          if (!ok) throw DomainError("config line " + std::to_string(lineno) + ": bad key '" + key + "'");
        }
        kv.set(key, tok.substr(eq + 1));
      }
    }
    return kv;
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  void set(const std::string& key, double value) { values_[key] = format_double(value); }
  void set(const std::string& key, std::uint64_t value) { values_[key] = std::to_string(value); }
  void set(const std::string& key, std::int64_t value) { values_[key] = std::to_string(value); }
  void set(const std::string& key, int value) { values_[key] = std::to_string(value); }
  void set(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }
  void set(const std::string& key, const char* value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void erase(const std::string& key) { values_.erase(key); }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw DomainError("missing config key '" + key + "'");
    return it->second;
  }
  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
  }

  double real(const std::string& key) const { return parse_double(key, str(key)); }
  double real(const std::string& key, double fallback) const {
    return has(key) ? real(key) : fallback;
  }

  std::uint64_t uint(const std::string& key) const {
    const std::string& s = str(key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      // Accept exact integral reals such as 1e6.
      double d = parse_double(key, s);
      if (!(d >= 0.0 && d < 1.8446744073709552e19 && d == static_cast<double>(static_cast<std::uint64_t>(d)))) {
        throw DomainError("config key '" + key + "': expected a nonnegative integer, got '" + s + "'");
      }
      return static_cast<std::uint64_t>(d);
    }
    return v;
  }
  std::uint64_t uint(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? uint(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw DomainError("config key '" + key + "': expected true/false, got '" + s + "'");
  }

  /// One key=value per line, keys in lexicographic order.
  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  /// Single-line rendering, used in logs and report headers.
  std::string to_line() const {
    std::string out;
    for (const auto& [k, v] : values_) {
      if (!out.empty()) out += ' ';
      out += k + "=" + v;
    }
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  void merge(const KeyValues& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
  }

  static std::string format_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
  }

  /// Fixed 17-significant-digit rendering.
  static std::string format_double17(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, p);
  }

  static double parse_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    auto [p, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      throw DomainError("config key '" + key + "': expected a number, got '" + s + "'");
    }
    return v;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace wrg
