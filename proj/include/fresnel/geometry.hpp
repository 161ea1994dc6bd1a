#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "fresnel/grid.hpp"

namespace fresnel {

enum class DomainKind { interval, box, half_space, stripe, ball, complement, empty };

inline const char* to_string(DomainKind k) {
  switch (k) {
    case DomainKind::interval: return "interval";
    case DomainKind::box: return "box";
    case DomainKind::half_space: return "half_space";
    case DomainKind::stripe: return "stripe";
    case DomainKind::ball: return "ball";
    case DomainKind::complement: return "complement";
    case DomainKind::empty: return "empty";
  }
  return "?";
}

/// Closed detector / object domain in R^m.
///  interval, box:   |x_a - center_a| <= half_widths_a
///  half_space:      normal . x >= offset
///  stripe:          |normal . x - offset| <= half_width
///  ball:            |x - center| <= radius
///  complement:      R^m minus inner (inner boundary excluded)
struct DomainSpec {
  DomainKind kind = DomainKind::box;
  int m = 1;
  Point center{0.0, 0.0, 0.0};
  Point half_widths{0.0, 0.0, 0.0};
  Point normal{1.0, 0.0, 0.0};
  double offset = 0.0;
  double half_width = 0.0;
  double radius = 0.0;
  std::shared_ptr<const DomainSpec> inner;

  static DomainSpec interval(double lo, double hi) {
    if (!(hi > lo)) throw std::domain_error("interval: need lo < hi");
    DomainSpec d;
    d.kind = DomainKind::interval;
    d.m = 1;
    d.center[0] = 0.5 * (lo + hi);
    d.half_widths[0] = 0.5 * (hi - lo);
    return d;
  }
  static DomainSpec box(int m, Point center, Point half) {
    DomainSpec d;
    d.kind = DomainKind::box;
    d.m = m;
    d.center = center;
    d.half_widths = half;
    d.validate();
    return d;
  }
  /// [-h, h]^m.
  static DomainSpec centered_box(int m, double h) { return box(m, {0, 0, 0}, {h, h, h}); }
  /// Detector [-1/2, 1/2]^m.
  static DomainSpec unit_box(int m) { return centered_box(m, 0.5); }
  static DomainSpec half_space(int m, Point n, double a) {
    DomainSpec d;
    d.kind = DomainKind::half_space;
    d.m = m;
    d.normal = n;
    d.offset = a;
    d.validate();
    return d;
  }
  static DomainSpec stripe(int m, Point n, double center_offset, double half_width) {
    DomainSpec d;
    d.kind = DomainKind::stripe;
    d.m = m;
    d.normal = n;
    d.offset = center_offset;
    d.half_width = half_width;
    d.validate();
    return d;
  }
  static DomainSpec ball(int m, Point center, double radius) {
    DomainSpec d;
    d.kind = DomainKind::ball;
    d.m = m;
    d.center = center;
    d.radius = radius;
    d.validate();
    return d;
  }
  static DomainSpec complement_of(const DomainSpec& in) {
    DomainSpec d;
    d.kind = DomainKind::complement;
    d.m = in.m;
    d.inner = std::make_shared<const DomainSpec>(in);
    return d;
  }
  static DomainSpec empty(int m) {
    DomainSpec d;
    d.kind = DomainKind::empty;
    d.m = m;
    return d;
  }

  void validate() const {
    if (m < 1 || m > 3) throw std::domain_error("DomainSpec: m must be 1, 2 or 3");
    switch (kind) {
      case DomainKind::interval:
      case DomainKind::box:
        for (int a = 0; a < m; ++a)
          if (!(half_widths[a] > 0.0)) throw std::domain_error("DomainSpec: box half-widths must be positive");
        break;
      case DomainKind::ball:
        if (!(radius > 0.0)) throw std::domain_error("DomainSpec: ball radius must be positive");
        break;
      case DomainKind::half_space:
      case DomainKind::stripe: {
        double s = 0.0;
        for (int a = 0; a < m; ++a) s += normal[a] * normal[a];
        if (std::fabs(s - 1.0) > 1e-12) throw std::domain_error("DomainSpec: normal must have unit length");
        if (kind == DomainKind::stripe && !(half_width > 0.0))
          throw std::domain_error("DomainSpec: stripe half-width must be positive");
        break;
      }
      default: break;
    }
  }

  bool is_convex() const { return kind != DomainKind::complement; }

  double dot_normal(const Point& x) const {
    double s = 0.0;
    for (int a = 0; a < m; ++a) s += normal[a] * x[a];
    return s;
  }

  bool contains(const Point& x, double tol = 0.0) const {
    switch (kind) {
      case DomainKind::interval:
      case DomainKind::box:
        for (int a = 0; a < m; ++a)
          if (std::fabs(x[a] - center[a]) > half_widths[a] + tol) return false;
        return true;
      case DomainKind::half_space: return dot_normal(x) >= offset - tol;
      case DomainKind::stripe: return std::fabs(dot_normal(x) - offset) <= half_width + tol;
      case DomainKind::ball: {
        double s = 0.0;
        for (int a = 0; a < m; ++a) s += (x[a] - center[a]) * (x[a] - center[a]);
        return std::sqrt(s) <= radius + tol;
      }
      case DomainKind::complement: return !inner->contains(x, -tol);
      case DomainKind::empty: return false;
    }
    return false;
  }

  /// Axis-aligned bounding box (lo, hi) per axis; infinite for unbounded domains.
  std::pair<Point, Point> bounding_box() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    Point lo{-inf, -inf, -inf}, hi{inf, inf, inf};
    if (kind == DomainKind::box || kind == DomainKind::interval) {
      for (int a = 0; a < m; ++a) {
        lo[a] = center[a] - half_widths[a];
        hi[a] = center[a] + half_widths[a];
      }
    } else if (kind == DomainKind::ball) {
      for (int a = 0; a < m; ++a) {
        lo[a] = center[a] - radius;
        hi[a] = center[a] + radius;
      }
    }
    return {lo, hi};
  }

  /// Parameter interval {t : x + t n in K} for convex K; nullopt if the line misses K.
  std::optional<std::pair<double, double>> ray_interval(const Point& x, const Point& n) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind) {
      case DomainKind::interval:
      case DomainKind::box: {
        double t0 = -inf, t1 = inf;
        for (int a = 0; a < m; ++a) {
          const double lo = center[a] - half_widths[a] - x[a];
          const double hi = center[a] + half_widths[a] - x[a];
          if (n[a] == 0.0) {
            if (lo > 0.0 || hi < 0.0) return std::nullopt;
            continue;
          }
          double ta = lo / n[a], tb = hi / n[a];
          if (ta > tb) std::swap(ta, tb);
          t0 = std::max(t0, ta);
          t1 = std::min(t1, tb);
        }
        if (t0 > t1) return std::nullopt;
        return std::make_pair(t0, t1);
      }
      case DomainKind::half_space: {
        const double s = dot_normal(x) - offset;
        const double v = dot_normal(n);
        if (v == 0.0) return s >= 0.0 ? std::optional(std::make_pair(-inf, inf)) : std::nullopt;
        const double t = -s / v;
        return v > 0.0 ? std::make_pair(t, inf) : std::make_pair(-inf, t);
      }
      case DomainKind::stripe: {
        const double s = dot_normal(x) - offset;
        const double v = dot_normal(n);
        if (v == 0.0) {
          if (std::fabs(s) <= half_width) return std::make_pair(-inf, inf);
          return std::nullopt;
        }
        double ta = (-half_width - s) / v, tb = (half_width - s) / v;
        if (ta > tb) std::swap(ta, tb);
        return std::make_pair(ta, tb);
      }
      case DomainKind::ball: {
        double b = 0.0, c = -radius * radius, nn = 0.0;
        for (int a = 0; a < m; ++a) {
          const double d = x[a] - center[a];
          b += d * n[a];
          c += d * d;
          nn += n[a] * n[a];
        }
        const double disc = b * b - nn * c;
        if (disc < 0.0) return std::nullopt;
        const double sq = std::sqrt(disc);
        return std::make_pair((-b - sq) / nn, (-b + sq) / nn);
      }
      default: throw std::invalid_argument("ray_interval: domain is not convex");
    }
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind) << "(m=" << m;
    switch (kind) {
      case DomainKind::interval:
      case DomainKind::box:
        os << ", center=";
        for (int a = 0; a < m; ++a) os << (a ? "," : "") << center[a];
        os << ", half=";
        for (int a = 0; a < m; ++a) os << (a ? "," : "") << half_widths[a];
        break;
      case DomainKind::ball:
        os << ", center=";
        for (int a = 0; a < m; ++a) os << (a ? "," : "") << center[a];
        os << ", radius=" << radius;
        break;
      case DomainKind::half_space:
      case DomainKind::stripe:
        os << ", normal=";
        for (int a = 0; a < m; ++a) os << (a ? "," : "") << normal[a];
        os << ", offset=" << offset;
        if (kind == DomainKind::stripe) os << ", half_width=" << half_width;
        break;
      case DomainKind::complement: os << ", of=" << inner->describe(); break;
      case DomainKind::empty: break;
    }
    os << ")";
    return os.str();
  }
};

/// inf{ y >= 0 : x + y n not in K }; 0 when x is outside K, +inf when the ray never leaves K.
inline double dist_directional(const Point& x, const Point& n, const DomainSpec& K) {
  double nn = 0.0;
  for (int a = 0; a < K.m; ++a) nn += n[a] * n[a];
  if (std::fabs(nn - 1.0) > 1e-9) throw std::domain_error("dist_directional: direction must have unit length");
  if (K.kind == DomainKind::empty) return 0.0;
  if (!K.contains(x)) return 0.0;
  if (K.kind == DomainKind::complement) {
    const DomainSpec& in = *K.inner;
    if (!in.is_convex()) throw std::invalid_argument("dist_directional: nested complements unsupported");
    const auto iv = in.ray_interval(x, n);
    if (!iv || iv->second < 0.0) return std::numeric_limits<double>::infinity();
    return std::max(iv->first, 0.0);
  }
  const auto iv = K.ray_interval(x, n);
  if (!iv) return 0.0;
  return std::max(iv->second, 0.0);
}

struct BoundaryDistance {
  double value = 0.0;
  bool inside = false;
};

/// Distance from x in K to the boundary of K (exact for every supported kind).
inline BoundaryDistance dist_boundary(const Point& x, const DomainSpec& K) {
  if (!K.contains(x)) return {0.0, false};
  switch (K.kind) {
    case DomainKind::interval:
    case DomainKind::box: {
      double d = std::numeric_limits<double>::infinity();
      for (int a = 0; a < K.m; ++a) d = std::min(d, K.half_widths[a] - std::fabs(x[a] - K.center[a]));
      return {std::max(d, 0.0), true};
    }
    case DomainKind::half_space: return {std::max(K.dot_normal(x) - K.offset, 0.0), true};
    case DomainKind::stripe: return {std::max(K.half_width - std::fabs(K.dot_normal(x) - K.offset), 0.0), true};
    case DomainKind::ball: {
      double s = 0.0;
      for (int a = 0; a < K.m; ++a) s += (x[a] - K.center[a]) * (x[a] - K.center[a]);
      return {std::max(K.radius - std::sqrt(s), 0.0), true};
    }
    case DomainKind::complement: {
      const DomainSpec& in = *K.inner;
      switch (in.kind) {
        case DomainKind::interval:
        case DomainKind::box: {
          double s = 0.0;
          for (int a = 0; a < K.m; ++a) {
            const double e = std::max(std::fabs(x[a] - in.center[a]) - in.half_widths[a], 0.0);
            s += e * e;
          }
          return {std::sqrt(s), true};
        }
        case DomainKind::half_space: return {std::max(in.offset - in.dot_normal(x), 0.0), true};
        case DomainKind::stripe: return {std::max(std::fabs(in.dot_normal(x) - in.offset) - in.half_width, 0.0), true};
        case DomainKind::ball: {
          double s = 0.0;
          for (int a = 0; a < K.m; ++a) s += (x[a] - in.center[a]) * (x[a] - in.center[a]);
          return {std::max(std::sqrt(s) - in.radius, 0.0), true};
        }
        case DomainKind::empty: return {std::numeric_limits<double>::infinity(), true};
        default: throw std::invalid_argument("dist_boundary: unsupported complement");
      }
    }
    case DomainKind::empty: return {0.0, false};
  }
  return {0.0, false};
}

/// Distance from x to K (0 inside K).
inline double dist_to_domain(const Point& x, const DomainSpec& K) {
  if (K.contains(x)) return 0.0;
  return dist_boundary(x, DomainSpec::complement_of(K)).value;
}

namespace detail {

inline Point direction_2d(double angle) { return {std::cos(angle), std::sin(angle), 0.0}; }

inline double sym_exit(const Point& x, const Point& n, const DomainSpec& K) {
  Point mn{-n[0], -n[1], -n[2]};
  return std::max(dist_directional(x, n, K), dist_directional(x, mn, K));
}

}  // namespace detail

/// inf over unit n of max(dist_n(x), dist_{-n}(x)), by direction sampling with golden-section refinement.
inline double dist_sym_sampled(const Point& x, const DomainSpec& K, int directions = 1024) {
  if (!K.contains(x)) return 0.0;
  if (K.m == 1) return detail::sym_exit(x, {1.0, 0.0, 0.0}, K);
  if (K.m == 2) {
    // Directions n and -n give the same value, so half a turn suffices.
    const double step = std::numbers::pi / directions;
    std::vector<std::pair<double, int>> vals;
    vals.reserve(directions);
    for (int i = 0; i < directions; ++i)
      vals.emplace_back(detail::sym_exit(x, detail::direction_2d(i * step), K), i);
    std::partial_sort(vals.begin(), vals.begin() + std::min(3, directions), vals.end());
    double best = vals.front().first;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int b = 0; b < std::min(3, directions); ++b) {
      double lo = (vals[b].second - 1) * step, hi = (vals[b].second + 1) * step;
      double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
      double fc = detail::sym_exit(x, detail::direction_2d(c), K);
      double fd = detail::sym_exit(x, detail::direction_2d(d), K);
      for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
        if (fc < fd) {
          hi = d; d = c; fd = fc;
          c = hi - g * (hi - lo);
          fc = detail::sym_exit(x, detail::direction_2d(c), K);
        } else {
          lo = c; c = d; fc = fd;
          d = lo + g * (hi - lo);
          fd = detail::sym_exit(x, detail::direction_2d(d), K);
        }
      }
      best = std::min({best, fc, fd});
    }
    return best;
  }
  // m = 3: Fibonacci sphere directions, no local refinement.
  double best = std::numeric_limits<double>::infinity();
  const int count = 4 * directions;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (i + 0.5) / count;
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    best = std::min(best, detail::sym_exit(x, {rad * std::cos(phi), rad * std::sin(phi), z}, K));
  }
  return best;
}

/// Symmetric boundary distance; closed form for the centred unit square, sampling otherwise.
inline double dist_sym(const Point& x, const DomainSpec& K) {
  if (!K.contains(x)) return 0.0;
  const bool unit_square = K.m == 2 && K.kind == DomainKind::box && K.center[0] == 0.0 && K.center[1] == 0.0 &&
                           K.half_widths[0] == 0.5 && K.half_widths[1] == 0.5;
  if (unit_square) {
    const double a = 0.5 - std::fabs(x[0]), b = 0.5 - std::fabs(x[1]);
    const double corner_chord = std::hypot(a, b);
    const double axis = std::min(0.5 + std::fabs(x[0]), 0.5 + std::fabs(x[1]));
    return std::min(corner_chord, axis);
  }
  return dist_sym_sampled(x, K);
}

}  // namespace fresnel
