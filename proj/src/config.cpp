#include "cylqg/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cylqg/errors.hpp"

namespace cylqg {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, int line,
                       const std::string& what) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << what;
  throw ConfigError(os.str());
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      return false;
  return true;
}

} // namespace

Config Config::parse(std::istream& is, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        fail(origin, lineno, "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (!valid_name(section))
        fail(origin, lineno, "invalid section name '" + section + "'");
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail(origin, lineno, "expected key=value, got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (!valid_name(key))
      fail(origin, lineno, "invalid key '" + key + "'");
    if (section.empty())
      fail(origin, lineno, "key '" + key + "' appears before any [section]");
    cfg.kv_[section + "." + key] = val;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  return parse(f, path);
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Config::get(const std::string& key,
                        const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double Config::get(const std::string& key, double fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': '" + it->second + "' is not a number");
  return v;
}

int Config::get(const std::string& key, int fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  char* end = nullptr;
  const long v = std::strtol(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': '" + it->second +
                      "' is not an integer");
  return static_cast<int>(v);
}

std::uint64_t Config::get(const std::string& key, std::uint64_t fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0')
    throw ConfigError("key '" + key + "': '" + it->second +
                      "' is not an unsigned integer");
  return static_cast<std::uint64_t>(v);
}

bool Config::get(const std::string& key, bool fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError("key '" + key + "': '" + it->second + "' is not a boolean");
}

std::vector<double> Config::get_list(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return {};
  std::vector<double> out;
  std::string item;
  std::istringstream is(it->second);
  while (std::getline(is, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0')
      throw ConfigError("key '" + key + "': '" + t + "' is not a number");
    out.push_back(v);
  }
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.find('.') == std::string::npos)
    throw ConfigError("key '" + key + "' must be section.name");
  kv_[key] = value;
}

void Config::write(std::ostream& os) const {
  std::string section;
  for (const auto& [key, val] : kv_) {
    const std::size_t dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << "\n";
      os << "[" << sec << "]\n";
      section = sec;
    }
    os << key.substr(dot + 1) << " = " << val << "\n";
  }
}

} // namespace cylqg
