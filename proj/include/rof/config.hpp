#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace rof {

/// Strict INI-style configuration: `[section]` headers (dots allowed for
/// nesting), `key = value` entries, full-line `#` comments. Section and key
/// order is canonicalized, duplicate keys are errors, and consumers must
/// account for every key.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static Config parse(const std::string& text, const std::string& origin = "config");
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  const Entry& at(const std::string& section, const std::string& key) const;
  std::vector<std::string> sections() const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  std::string serialize() const;

  const std::string& origin() const { return origin_; }
  const std::map<std::string, std::map<std::string, Entry>>& tree() const { return tree_; }

 private:
  std::map<std::string, std::map<std::string, Entry>> tree_;
  std::string origin_;
};

/// Tracks key consumption against a Config so unknown keys become errors.
class ConfigReader {
 public:
  explicit ConfigReader(const Config& config) : config_(config) {}

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key);
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  double get_double(const std::string& section, const std::string& key);
  double get_double(const std::string& section, const std::string& key, double fallback);
  long get_long(const std::string& section, const std::string& key);
  long get_long(const std::string& section, const std::string& key, long fallback);
  std::uint64_t get_uint64(const std::string& section, const std::string& key);
  std::vector<double> get_doubles(const std::string& section, const std::string& key);

  /// Throws naming every key that was present but never consumed.
  void finish() const;

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& why) const;

 private:
  const Config::Entry& consume(const std::string& section, const std::string& key);

  const Config& config_;
  std::set<std::pair<std::string, std::string>> consumed_;
};

}  // namespace rof
