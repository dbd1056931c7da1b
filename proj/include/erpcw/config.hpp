#pragma once

// INI run configuration. Keys are "section.key"; every key read is recorded
// with the value actually used, and keys never read are rejected.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "erpcw/errors.hpp"

namespace erpcw {

class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_file(const std::string& path) {
    RunConfig c;
    c.source_ = path;
    try {
      boost::property_tree::ini_parser::read_ini(path, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw InvalidArgument("config " + e.filename() + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    c.check_depth();
    return c;
  }

  static RunConfig from_string(const std::string& text, const std::string& name = "<string>") {
    RunConfig c;
    c.source_ = name;
    std::istringstream is(text);
    try {
      boost::property_tree::ini_parser::read_ini(is, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw InvalidArgument("config " + name + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    c.check_depth();
    return c;
  }

  // "section.key=value"
  void set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
      throw InvalidArgument("--set expects section.key=value, got '" + assignment + "'");
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (std::count(key.begin(), key.end(), '.') != 1 || key.front() == '.' || key.back() == '.')
      throw InvalidArgument("--set key must have the form section.key, got '" + key + "'");
    tree_.put(key, value);
    overrides_.insert(key);
  }

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  double get_double(const std::string& key, double def) {
    const auto raw = tree_.get_optional<std::string>(key);
    double v = def;
    if (raw) v = parse_double(key, *raw);
    record(key, v);
    return v;
  }

  int get_int(const std::string& key, int def) {
    const auto raw = tree_.get_optional<std::string>(key);
    int v = def;
    if (raw) {
      const double d = parse_double(key, *raw);
      if (d != static_cast<double>(static_cast<long long>(d)) || d < -2147483648.0 || d > 2147483647.0)
        throw InvalidArgument(where(key) + ": expected an integer, got '" + *raw + "'");
      v = static_cast<int>(d);
    }
    record(key, v);
    return v;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t def) {
    const auto raw = tree_.get_optional<std::string>(key);
    std::uint64_t v = def;
    if (raw) {
      try {
        const std::string t = trim(*raw);
        if (t.empty() || t.front() == '-' || t.front() == '+') throw std::invalid_argument("sign");
        std::size_t pos = 0;
        v = std::stoull(t, &pos);
        if (pos != t.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InvalidArgument(where(key) + ": expected an unsigned integer, got '" + *raw + "'");
      }
    }
    record(key, v);
    return v;
  }

  bool get_bool(const std::string& key, bool def) {
    const auto raw = tree_.get_optional<std::string>(key);
    bool v = def;
    if (raw) {
      std::string s = trim(*raw);
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (s == "true" || s == "1" || s == "yes" || s == "on")
        v = true;
      else if (s == "false" || s == "0" || s == "no" || s == "off")
        v = false;
      else
        throw InvalidArgument(where(key) + ": expected a boolean, got '" + *raw + "'");
    }
    record(key, v);
    return v;
  }

  std::string get_string(const std::string& key, const std::string& def) {
    const auto raw = tree_.get_optional<std::string>(key);
    const std::string v = raw ? trim(*raw) : def;
    record(key, v);
    return v;
  }

  std::string get_choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    const std::string v = get_string(key, def);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw InvalidArgument(where(key) + ": '" + v + "' is not one of {" + list + "}");
    }
    return v;
  }

  // Comma-separated list.
  std::vector<double> get_list(const std::string& key, const std::vector<double>& def) {
    const auto raw = tree_.get_optional<std::string>(key);
    std::vector<double> v = def;
    if (raw) {
      v.clear();
      std::stringstream ss(*raw);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!trim(item).empty()) v.push_back(parse_double(key, item));
    }
    record(key, v);
    return v;
  }

  // Every key in the file or in --set overrides that no command read.
  void reject_unknown() const {
    std::vector<std::string> unknown;
    for (const auto& [section, body] : tree_) {
      if (body.empty()) {
        if (!used_.count(section)) unknown.push_back(section);
        continue;
      }
      for (const auto& kv : body) {
        const std::string key = section + "." + kv.first;
        if (!used_.count(key)) unknown.push_back(key);
      }
    }
    if (unknown.empty()) return;
    std::string msg = "unknown configuration key(s) in " + source_ + ":";
    for (const auto& k : unknown) msg += " " + k + (overrides_.count(k) ? " (from --set)" : "");
    throw InvalidArgument(msg);
  }

  // Effective values of every key read, defaults included.
  const nlohmann::json& echo() const { return echo_; }
  const std::string& source() const { return source_; }

 private:
  boost::property_tree::ptree tree_;
  std::set<std::string> used_;
  std::set<std::string> overrides_;
  nlohmann::json echo_ = nlohmann::json::object();
  std::string source_ = "<defaults>";

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  std::string where(const std::string& key) const {
    return source_ + " [" + key.substr(0, key.find('.')) + "] " + key.substr(key.find('.') + 1);
  }

  double parse_double(const std::string& key, const std::string& raw) const {
    const std::string s = trim(raw);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw InvalidArgument(where(key) + ": expected a number, got '" + raw + "'");
    }
  }

  template <class T>
  void record(const std::string& key, const T& v) {
    used_.insert(key);
    const auto dot = key.find('.');
    echo_[key.substr(0, dot)][key.substr(dot + 1)] = v;
  }

  void check_depth() const {
    for (const auto& [section, body] : tree_)
      if (body.empty() && !body.data().empty())
        throw InvalidArgument("config " + source_ + ": key '" + section + "' is outside any [section]");
  }
};

}  // namespace erpcw
