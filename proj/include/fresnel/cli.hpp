#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace fresnel {

/// Parses a length given either directly ("0.002") or as its inverse ("500inv" means 1/500).
inline double parse_length(const std::string& text) {
  std::string s = text;
  bool inverse = false;
  if (s.size() > 3 && s.compare(s.size() - 3, 3, "inv") == 0) {
    inverse = true;
    s.resize(s.size() - 3);
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a length: '" + text + "'");
  }
  if (used != s.size() || !std::isfinite(v) || !(v > 0.0))
    throw std::invalid_argument("not a positive length: '" + text + "'");
  return inverse ? 1.0 / v : v;
}

}  // namespace fresnel
