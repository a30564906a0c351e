#include "rof/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rof/positioning.hpp"

namespace rof {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& path, int line) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (...) {
  }
  throw std::invalid_argument(path + ":" + std::to_string(line) + ": bad numeric field '" + s + "'");
}

// Reads a CSV with the exact expected header; returns one vector per column.
std::vector<std::vector<double>> read_csv(const std::string& path,
                                          const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  int lineno = 0;
  // Header row (comment lines before it are allowed).
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    break;
  }
  std::vector<std::string> cols = split(trim(line), ',');
  if (cols.size() != header.size())
    throw std::invalid_argument(path + ": expected " + std::to_string(header.size()) + " columns");
  for (size_t i = 0; i < header.size(); ++i)
    if (trim(cols[i]) != header[i])
      throw std::invalid_argument(path + ": expected header column '" + header[i] + "', got '" +
                                  trim(cols[i]) + "'");

  std::vector<std::vector<double>> data(header.size());
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::vector<std::string> fields = split(t, ',');
    if (fields.size() != header.size())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": wrong field count");
    for (size_t i = 0; i < fields.size(); ++i)
      data[i].push_back(parse_double(fields[i], path, lineno));
  }
  if (data[0].empty()) throw std::invalid_argument(path + ": no data rows");
  return data;
}

ArrayXd to_array(const std::vector<double>& v) {
  return Eigen::Map<const ArrayXd>(v.data(), Index(v.size()));
}

}  // namespace

RawMeasurement read_measurement(const std::string& path) {
  const auto data = read_csv(path, {"freq_hz", "magnitude_db", "group_delay_s"});
  RawMeasurement meas;
  meas.freqs = to_array(data[0]);
  meas.magnitude_db = to_array(data[1]);
  meas.group_delay = to_array(data[2]);
  meas.validate();
  return meas;
}

void write_measurement(const std::string& path, const RawMeasurement& meas) {
  std::string body = "freq_hz,magnitude_db,group_delay_s\n";
  for (Index i = 0; i < meas.freqs.size(); ++i) {
    body += format_double(meas.freqs(i)) + "," + format_double(meas.magnitude_db(i)) + "," +
            format_double(meas.group_delay(i)) + "\n";
  }
  write_file_atomic(path, body);
}

void write_channel(const std::string& path, const ArrayXd& freqs, const ArrayXd& magnitude_db,
                   const ArrayXd& group_delay, const ArrayXd& phase) {
  std::string body = "freq_hz,magnitude_db,group_delay_s,phase_rad\n";
  for (Index i = 0; i < freqs.size(); ++i) {
    body += format_double(freqs(i)) + "," + format_double(magnitude_db(i)) + "," +
            format_double(group_delay(i)) + "," + format_double(phase(i)) + "\n";
  }
  write_file_atomic(path, body);
}

std::vector<UePosition> read_trajectory(const std::string& path, double ue_z) {
  const auto data = read_csv(path, {"px_m", "py_m"});
  std::vector<UePosition> out(data[0].size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = {data[0][i], data[1][i], ue_z};
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace rof
