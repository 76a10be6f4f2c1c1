#ifndef CYLQG_CONFIG_HPP
#define CYLQG_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cylqg {

// Flat key-value configuration with [section] headers. Keys are stored as
// "section.key". Parse errors carry the line number (ConfigError).
class Config {
public:
  static Config parse(std::istream& is, const std::string& origin = "<stream>");
  static Config parse_file(const std::string& path);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  // keeps string literals away from the bool overload
  std::string get(const std::string& key, const char* fallback) const {
    return get(key, std::string(fallback));
  }
  double get(const std::string& key, double fallback) const;
  int get(const std::string& key, int fallback) const;
  std::uint64_t get(const std::string& key, std::uint64_t fallback) const;
  bool get(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const; // empty if absent

  void set(const std::string& key, const std::string& value);

  // Serialization groups keys back under their sections, sorted; the
  // output re-parses to an equal Config.
  void write(std::ostream& os) const;
  bool operator==(const Config& other) const { return kv_ == other.kv_; }

  const std::map<std::string, std::string>& entries() const { return kv_; }

private:
  std::map<std::string, std::string> kv_;
  std::string origin_;
};

} // namespace cylqg

#endif
