#include "rof/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rof/io.hpp"

namespace rof {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void parse_error(const std::string& origin, int line, size_t column,
                              const std::string& why) {
  throw std::invalid_argument(origin + ":" + std::to_string(line) + ":" +
                              std::to_string(column + 1) + ": " + why);
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_error(origin, lineno, raw.find('['), "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) parse_error(origin, lineno, raw.find('['), "empty section name");
      cfg.tree_[section];  // a section may be empty
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      parse_error(origin, lineno, 0, "expected 'key = value' or '[section]'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) parse_error(origin, lineno, 0, "empty key");
    if (section.empty()) parse_error(origin, lineno, 0, "entry before any [section]");
    auto [it, inserted] = cfg.tree_[section].emplace(key, Entry{value, lineno});
    if (!inserted)
      parse_error(origin, lineno, 0, "duplicate key '" + section + "." + key + "'");
  }
  return cfg;
}

Config Config::load(const std::string& path) { return parse(read_file(path), path); }

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = tree_.find(section);
  return s != tree_.end() && s->second.count(key) > 0;
}

const Config::Entry& Config::at(const std::string& section, const std::string& key) const {
  auto s = tree_.find(section);
  if (s == tree_.end())
    throw std::invalid_argument(origin_ + ": missing section [" + section + "]");
  auto k = s->second.find(key);
  if (k == s->second.end())
    throw std::invalid_argument(origin_ + ": missing key '" + section + "." + key + "'");
  return k->second;
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, entries] : tree_) out.push_back(name);
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  tree_[section][key] = Entry{value, 0};
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [name, entries] : tree_) {
    out += "[" + name + "]\n";
    for (const auto& [key, entry] : entries) out += key + " = " + entry.value + "\n";
    out += "\n";
  }
  return out;
}

bool ConfigReader::has(const std::string& section, const std::string& key) const {
  return config_.has(section, key);
}

const Config::Entry& ConfigReader::consume(const std::string& section, const std::string& key) {
  consumed_.insert({section, key});
  return config_.at(section, key);
}

std::string ConfigReader::get_string(const std::string& section, const std::string& key) {
  return consume(section, key).value;
}

std::string ConfigReader::get_string(const std::string& section, const std::string& key,
                                     const std::string& fallback) {
  if (!config_.has(section, key)) return fallback;
  return consume(section, key).value;
}

double ConfigReader::get_double(const std::string& section, const std::string& key) {
  const Config::Entry& e = consume(section, key);
  try {
    size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (trim(e.value.substr(pos)).empty()) return v;
  } catch (...) {
  }
  fail(section, key, "expected a number, got '" + e.value + "'");
}

double ConfigReader::get_double(const std::string& section, const std::string& key,
                                double fallback) {
  if (!config_.has(section, key)) return fallback;
  return get_double(section, key);
}

long ConfigReader::get_long(const std::string& section, const std::string& key) {
  const double v = get_double(section, key);
  const long l = long(v);
  if (double(l) != v) fail(section, key, "expected an integer");
  return l;
}

long ConfigReader::get_long(const std::string& section, const std::string& key, long fallback) {
  if (!config_.has(section, key)) return fallback;
  return get_long(section, key);
}

std::uint64_t ConfigReader::get_uint64(const std::string& section, const std::string& key) {
  const Config::Entry& e = consume(section, key);
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(e.value, &pos);
    if (trim(e.value.substr(pos)).empty()) return v;
  } catch (...) {
  }
  fail(section, key, "expected an unsigned integer, got '" + e.value + "'");
}

std::vector<double> ConfigReader::get_doubles(const std::string& section, const std::string& key) {
  const Config::Entry& e = consume(section, key);
  std::vector<double> out;
  std::string cur;
  std::istringstream ss(e.value);
  while (std::getline(ss, cur, ',')) {
    try {
      size_t pos = 0;
      const double v = std::stod(cur, &pos);
      if (!trim(cur.substr(pos)).empty()) throw std::invalid_argument("");
      out.push_back(v);
    } catch (...) {
      fail(section, key, "expected a comma-separated number list, got '" + e.value + "'");
    }
  }
  if (out.empty()) fail(section, key, "empty list");
  return out;
}

void ConfigReader::finish() const {
  for (const auto& [name, entries] : config_.tree())
    for (const auto& [key, entry] : entries)
      if (!consumed_.count({name, key}))
        throw std::invalid_argument(config_.origin() + ":" + std::to_string(entry.line) +
                                    ": unknown key '" + name + "." + key + "'");
}

void ConfigReader::fail(const std::string& section, const std::string& key,
                        const std::string& why) const {
  int line = 0;
  if (config_.has(section, key)) line = config_.at(section, key).line;
  throw std::invalid_argument(config_.origin() + ":" + std::to_string(line) + ": key '" + section +
                              "." + key + "': " + why);
}

}  // namespace rof
