#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fresnel {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  for (int prec = 6; prec <= 17; ++prec) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    if (std::stod(os.str()) == v) return os.str();
  }
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// 64-bit FNV-1a hash rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Ordered flat `key = value` record used for configs and reports.
class KeyValueText {
 public:
  void set(const std::string& key, const std::string& value) {
    if (key.empty() || key.find_first_of("=\n#") != std::string::npos)
      throw std::invalid_argument("KeyValueText: invalid key '" + key + "'");
    if (value.find('\n') != std::string::npos) throw std::invalid_argument("KeyValueText: value contains newline");
    for (auto& kv : entries_)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    entries_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, long long value) { set(key, std::to_string(value)); }
  void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  bool has(const std::string& key) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& kv) { return kv.first == key; });
  }
  const std::string& get(const std::string& key) const {
    for (const auto& kv : entries_)
      if (kv.first == key) return kv.second;
    throw std::out_of_range("KeyValueText: missing key '" + key + "'");
  }
  double get_double(const std::string& key) const { return std::stod(get(key)); }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void merge(const KeyValueText& other) {
    for (const auto& kv : other.entries_) set(kv.first, kv.second);
  }

  std::string to_text() const {
    std::string out;
    for (const auto& kv : entries_) out += kv.first + " = " + kv.second + "\n";
    return out;
  }
  std::string hash() const { return fnv1a_hex(to_text()); }

  static KeyValueText parse(const std::string& text) {
    KeyValueText kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) + ": expected 'key = value'");
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
  }
  static KeyValueText read(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
  }
  void write(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << to_text();
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// CSV with leading `# key=value` metadata lines and one header row.
inline void write_csv(const std::string& path, const KeyValueText& meta, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  for (const auto& kv : meta.entries()) os << "# " << kv.first << '=' << kv.second << '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw std::invalid_argument("write_csv: row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
    os << '\n';
  }
}

/// Binary 16-bit PGM (P5, big-endian samples); values are mapped linearly from [lo, hi] to [0, 65535].
/// Row 0 of `values` is written as the bottom image row so that +y points up. Each comment line lands in the header.
inline void write_pgm16(const std::string& path, std::size_t width, std::size_t height, const std::vector<double>& values,
                        double lo, double hi, const std::vector<std::string>& comments = {}) {
  if (values.size() != width * height) throw std::invalid_argument("write_pgm16: size mismatch");
  if (!(hi > lo)) hi = lo + 1.0;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "P5\n";
  for (const auto& c : comments) os << "# " << c << '\n';
  os << width << ' ' << height << "\n65535\n";
  for (std::size_t row = height; row-- > 0;) {
    for (std::size_t col = 0; col < width; ++col) {
      double t = (values[row * width + col] - lo) / (hi - lo);
      t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
      const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      os.write(bytes, 2);
    }
  }
}

struct Pgm16 {
  std::size_t width = 0, height = 0;
  std::vector<std::uint16_t> pixels;  // file order, top row first
};

inline Pgm16 read_pgm16(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string magic;
  Pgm16 img;
  int maxval = 0;
  auto skip_comments = [&is] {
    is >> std::ws;
    while (is.peek() == '#') {
      std::string line;
      std::getline(is, line);
      is >> std::ws;
    }
  };
  is >> magic;
  skip_comments();
  is >> img.width;
  skip_comments();
  is >> img.height;
  skip_comments();
  is >> maxval;
  if (magic != "P5" || maxval != 65535) throw std::runtime_error(path + ": not a 16-bit P5 image");
  is.get();
  img.pixels.resize(img.width * img.height);
  for (auto& p : img.pixels) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    p = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  if (!is) throw std::runtime_error(path + ": truncated image");
  return img;
}

}  // namespace fresnel
