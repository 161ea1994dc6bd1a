#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fresnel/fft.hpp"
#include "fresnel/geometry.hpp"
#include "fresnel/grid.hpp"
#include "fresnel/io.hpp"
#include "fresnel/parallel.hpp"
#include "fresnel/specfun.hpp"
#include "fresnel/splines.hpp"

namespace fresnel {

/// Sampling step, in units of the theta_tilde argument, used by every profile maximisation.
inline constexpr double kProfileStep = 0.005;
/// Half-width beyond sqrt(f_delta) of the window used for maxima over the real line.
inline constexpr double kProfileWindow = 40.0;

/// Two-sided edge profile E_{f_delta}(x) = (|theta(x - a)|^2 + |theta(-x - a)|^2)^{1/2}, a = sqrt(f_delta).
inline double leak_profile(double f_delta, double x) {
  if (!(f_delta >= 0.0) || !std::isfinite(f_delta)) throw std::domain_error("leak_profile: f_delta must be >= 0");
  const double a = std::sqrt(f_delta);
  return std::sqrt(std::norm(theta_tilde(x - a)) + std::norm(theta_tilde(-x - a)));
}

/// Symmetrised magnitude of the edge-difference profile theta(x) - theta(x - sqrt(f_delta)).
inline double sym_theta_diff(double f_delta, double x) {
  if (f_delta == 0.0) return 0.0;
  const double a = std::sqrt(f_delta);
  const cplx p = theta_tilde(x) - theta_tilde(x - a);
  const cplx q = theta_tilde(-x) - theta_tilde(-x - a);
  return std::sqrt(0.5 * (std::norm(p) + std::norm(q)));
}

/// Symmetrised magnitude of theta_tilde.
inline double sym_theta(double x) { return std::sqrt(0.5 * (std::norm(theta_tilde(x)) + std::norm(theta_tilde(-x)))); }

struct ProfileMax {
  double value = 0.0;
  double arg = 0.0;
};

namespace detail {

template <class F>
ProfileMax golden_max(F&& fn, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    if (fc > fd) {
      hi = d; d = c; fd = fc;
      c = hi - g * (hi - lo);
      fc = fn(c);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + g * (hi - lo);
      fd = fn(d);
    }
  }
  return fc > fd ? ProfileMax{fc, c} : ProfileMax{fd, d};
}

}  // namespace detail

/// Maximum of fn over [lo, hi]: samples at `step` (endpoints included) and golden-section refinement
/// on the brackets around the three largest local sample maxima.
template <class F>
ProfileMax maximize_profile(F&& fn, double lo, double hi, double step = kProfileStep) {
  if (!(hi >= lo)) throw std::domain_error("maximize_profile: empty interval");
  const std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  std::vector<double> xs(n), vs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = i + 1 == n ? hi : lo + static_cast<double>(i) * step;
    vs[i] = fn(xs[i]);
  }
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || vs[i] >= vs[i - 1];
    const bool right = i + 1 == n || vs[i] >= vs[i + 1];
    if (left && right) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return vs[a] > vs[b]; });
  ProfileMax best{vs[peaks.front()], xs[peaks.front()]};
  for (std::size_t b = 0; b < std::min<std::size_t>(3, peaks.size()); ++b) {
    const std::size_t i = peaks[b];
    const double a = xs[i == 0 ? 0 : i - 1];
    const double c = xs[i + 1 == n ? n - 1 : i + 1];
    if (c <= a) continue;
    const ProfileMax r = detail::golden_max(fn, a, c);
    if (r.value > best.value) best = r;
  }
  return best;
}

// ---------------------------------------------------------------- filters

enum class FilterKind { box, simplified, halfspace, real_sym };

inline const char* to_string(FilterKind k) {
  switch (k) {
    case FilterKind::box: return "box";
    case FilterKind::simplified: return "simplified";
    case FilterKind::halfspace: return "halfspace";
    case FilterKind::real_sym: return "real-sym";
  }
  return "?";
}

/// Fourier-space leakage filter. Leakage of h outside the detector is bounded by ||filter * F(h)||.
///  box:        |1 - prod_j iota(f_delta, xi_j / sqrt f)|, object in the box shrunk by Delta
///  simplified: (sum_j E_{f_delta}(xi_j / sqrt f)^2)^{1/2}
///  halfspace:  |theta(-n.xi / sqrt f - sqrt f_delta)|, object at distance Delta inside {n.x <= 0} style detector
///  real_sym:   2^{-1/2} E_{f_delta}(n.xi / sqrt f), the symmetrised half-space filter for real objects
struct LeakageFilter {
  FilterKind kind = FilterKind::simplified;
  double f = 1.0;
  double f_delta = 1.0;
  int m = 1;
  Point normal{1.0, 0.0, 0.0};

  void validate() const {
    require_positive(f, "LeakageFilter: f");
    if (!(f_delta >= 0.0) || !std::isfinite(f_delta)) throw std::domain_error("LeakageFilter: f_delta must be >= 0");
    if (kind == FilterKind::box) require_positive(f_delta, "LeakageFilter: box f_delta");
    if (m < 1 || m > 3) throw std::domain_error("LeakageFilter: m must be 1, 2 or 3");
  }
  double operator()(const Point& xi) const;
};

inline double filter_eval(const LeakageFilter& p, const Point& xi) {
  const double s = 1.0 / std::sqrt(p.f);
  switch (p.kind) {
    case FilterKind::box: {
      cplx prod(1.0, 0.0);
      for (int j = 0; j < p.m; ++j) prod *= iota_tilde(p.f_delta, xi[j] * s);
      return std::abs(1.0 - prod);
    }
    case FilterKind::simplified: {
      double acc = 0.0;
      for (int j = 0; j < p.m; ++j) {
        const double e = leak_profile(p.f_delta, xi[j] * s);
        acc += e * e;
      }
      return std::sqrt(acc);
    }
    case FilterKind::halfspace: {
      double t = 0.0;
      for (int j = 0; j < p.m; ++j) t += p.normal[j] * xi[j];
      return std::abs(theta_tilde(-t * s - std::sqrt(p.f_delta)));
    }
    case FilterKind::real_sym: {
      double t = 0.0;
      for (int j = 0; j < p.m; ++j) t += p.normal[j] * xi[j];
      return std::numbers::sqrt2 / 2.0 * leak_profile(p.f_delta, t * s);
    }
  }
  return 0.0;
}

inline double LeakageFilter::operator()(const Point& xi) const { return filter_eval(*this, xi); }

/// ||filter * F(field)|| for a sampled field, using the discrete unitary normalisation.
inline double filtered_norm(const LeakageFilter& p, const ComplexField& field) {
  p.validate();
  if (field.grid.m != p.m) throw std::invalid_argument("filtered_norm: dimension mismatch");
  std::vector<cplx> spec = field.samples;
  Fft::forward(spec, field.grid);
  const Grid& g = field.grid;
  // Separable filters are tabulated per axis; the others are evaluated pointwise.
  double acc = 0.0;
  if (p.kind == FilterKind::simplified) {
    std::vector<double> e2(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
      const double e = leak_profile(p.f_delta, g.freq(j) / std::sqrt(p.f));
      e2[j] = e * e;
    }
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const auto ij = g.unflatten(i);
      double w = 0.0;
      for (int a = 0; a < g.m; ++a) w += e2[ij[a]];
      acc += w * std::norm(spec[i]);
    }
  } else if (p.kind == FilterKind::box) {
    std::vector<cplx> io(g.n);
    for (std::size_t j = 0; j < g.n; ++j) io[j] = iota_tilde(p.f_delta, g.freq(j) / std::sqrt(p.f));
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const auto ij = g.unflatten(i);
      cplx prod(1.0, 0.0);
      for (int a = 0; a < g.m; ++a) prod *= io[ij[a]];
      acc += std::norm(1.0 - prod) * std::norm(spec[i]);
    }
  } else {
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const double w = filter_eval(p, g.frequency(i));
      acc += w * w * std::norm(spec[i]);
    }
  }
  return std::sqrt(acc * g.cell_volume() / static_cast<double>(spec.size()));
}

// ---------------------------------------------------------------- constants

struct LowTotal {
  double c_low = 0.0;
  double c_tot = 0.0;
};

/// C_low = max of E_{f_delta} over |x| <= halfwidth, C_tot = max over the real line.
/// E is even, so both maxima are taken over x >= 0. Outside [0, sqrt(f_delta) + 40] the profile is within
/// 1/(40 pi) of its limit 1, well below the interior maximum.
inline LowTotal c_low_c_tot(double f_delta, double halfwidth) {
  if (!(f_delta >= 0.0) || !std::isfinite(f_delta)) throw std::domain_error("c_low_c_tot: f_delta must be >= 0");
  if (!(halfwidth >= 0.0) || !std::isfinite(halfwidth)) throw std::domain_error("c_low_c_tot: halfwidth must be >= 0");
  auto e = [f_delta](double x) { return leak_profile(f_delta, x); };
  const double wmax = std::sqrt(f_delta) + kProfileWindow;
  LowTotal r;
  r.c_tot = maximize_profile(e, 0.0, wmax).value;
  r.c_low = maximize_profile(e, 0.0, halfwidth).value;
  r.c_tot = std::max(r.c_tot, r.c_low);
  return r;
}

/// max_x sym(theta_tilde)(x).
inline double c_sym_bound() {
  return maximize_profile([](double x) { return sym_theta(x); }, 0.0, kProfileWindow).value;
}

/// C^sym_{f_delta} = max_x sym(theta_tilde_{f_delta})(x); 0 for f_delta = 0.
inline double c_sym_delta(double f_delta) {
  if (!(f_delta >= 0.0) || !std::isfinite(f_delta)) throw std::domain_error("c_sym_delta: f_delta must be >= 0");
  if (f_delta == 0.0) return 0.0;
  return maximize_profile([f_delta](double x) { return sym_theta_diff(f_delta, x); }, 0.0,
                          std::sqrt(f_delta) + kProfileWindow)
      .value;
}

/// sym(p)(xi) = 2^{-1/2}(|p(xi)|^2 + |p(-xi)|^2)^{1/2} for samples on a grid symmetric about 0.
inline std::vector<double> sym_profile(std::span<const double> xs, std::span<const cplx> values, double tol = 1e-12) {
  if (xs.size() != values.size()) throw std::invalid_argument("sym_profile: size mismatch");
  const std::size_t n = xs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = std::max(1.0, std::fabs(xs[i]));
    if (std::fabs(xs[i] + xs[n - 1 - i]) > tol * scale)
      throw std::invalid_argument("sym_profile: sampling is not symmetric about 0");
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(0.5 * (std::norm(values[i]) + std::norm(values[n - 1 - i])));
  return out;
}

enum class StabilityVariant { complex, real_1d, real_m };

inline const char* to_string(StabilityVariant v) {
  switch (v) {
    case StabilityVariant::complex: return "complex";
    case StabilityVariant::real_1d: return "real_1d";
    case StabilityVariant::real_m: return "real_m";
  }
  return "?";
}

inline StabilityVariant parse_stability_variant(const std::string& s) {
  if (s == "complex") return StabilityVariant::complex;
  if (s == "real_1d" || s == "real-1d") return StabilityVariant::real_1d;
  if (s == "real_m" || s == "real-m" || s == "real") return StabilityVariant::real_m;
  throw std::invalid_argument("unknown stability variant '" + s + "'");
}

struct StabilityConstants {
  double c_low = 0.0;
  double c_tot = 0.0;
  double c_band = 0.0;
  double c_stab = 0.0;
  std::optional<double> c_sym;
  double nu = 1.0;
  double f = 0.0;  // only set for real_1d
  double f_delta = 0.0;
  double f_r = 0.0;
  int k = 0;
  int m = 1;
  StabilityVariant variant = StabilityVariant::complex;
  double discriminant = 0.0;  // C_stab^2 before clamping

  /// Lower contrast factor ||D(h)|_K|| >= guarantee() ||h||: C_stab^m for complex objects, C_stab otherwise.
  double guarantee() const { return variant == StabilityVariant::complex ? std::pow(c_stab, m) : c_stab; }

  KeyValueText report() const {
    KeyValueText kv;
    kv.set("variant", to_string(variant));
    kv.set("k", k);
    kv.set("nu", nu);
    kv.set("m", m);
    if (variant == StabilityVariant::real_1d) kv.set("f", f);
    kv.set("f_delta", f_delta);
    kv.set("f_r", f_r);
    kv.set("halfwidth_xi", nu * std::numbers::pi / std::sqrt(f_r));
    kv.set("c_low", c_low);
    kv.set("c_tot", c_tot);
    kv.set("c_band", c_band);
    if (c_sym) kv.set("c_sym_delta", *c_sym);
    kv.set("discriminant", discriminant);
    kv.set("c_stab", c_stab);
    kv.set("guarantee", guarantee());
    return kv;
  }
};

/// C_stab^2 for the given ingredients; the bracket can be negative, meaning no guarantee.
inline double stability_discriminant(StabilityVariant v, double c_low, double c_tot, double c_band, double c_sym, int m) {
  const double inner = c_low * c_low + c_band * c_band * (c_tot * c_tot - c_low * c_low);
  switch (v) {
    case StabilityVariant::complex: return 1.0 - inner;
    case StabilityVariant::real_1d: {
      const double s = c_sym + std::sqrt(std::max(inner, 0.0));
      return 1.0 - s * s;
    }
    case StabilityVariant::real_m: {
      const double s = c_sym + std::sqrt(static_cast<double>(m)) * std::sqrt(std::max(inner, 0.0));
      return 1.0 - s * s;
    }
  }
  return 0.0;
}

inline double clamp_stability(double disc) { return disc > 0.0 ? std::min(std::sqrt(disc), 1.0) : 0.0; }

namespace detail {

inline void check_stability_inputs(double f_delta, double f_r, int k, double nu) {
  if (!(f_delta >= 0.0) || !std::isfinite(f_delta)) throw std::domain_error("stability: f_delta must be >= 0");
  require_positive(f_r, "stability: f_r");
  require_spline_order(k);
  if (!(nu >= 1.0) || !std::isfinite(nu)) throw std::domain_error("stability: nu must be >= 1");
}

}  // namespace detail

/// Complex-valued spline stability constant; the m-dimensional guarantee is c_stab^m.
inline StabilityConstants c_stab_complex(double f_delta, double f_r, int k, double nu, int m = 1) {
  detail::check_stability_inputs(f_delta, f_r, k, nu);
  StabilityConstants s;
  s.variant = StabilityVariant::complex;
  s.f_delta = f_delta;
  s.f_r = f_r;
  s.k = k;
  s.nu = nu;
  s.m = m;
  const LowTotal lt = c_low_c_tot(f_delta, nu * std::numbers::pi / std::sqrt(f_r));
  s.c_low = lt.c_low;
  s.c_tot = lt.c_tot;
  s.c_band = c_band(k, nu).C_band;
  s.discriminant = stability_discriminant(s.variant, s.c_low, s.c_tot, s.c_band, 0.0, m);
  s.c_stab = clamp_stability(s.discriminant);
  return s;
}

/// Real-valued spline stability constants. real_1d: Omega = K = [-1/2, 1/2], f_delta is fixed to f/4 and
/// the argument is ignored. real_m: the cross-shaped object domain with margin Delta, f_delta = Delta^2 f.
inline StabilityConstants c_stab_real(double f, double f_delta, double f_r, int k, double nu, int m,
                                      StabilityVariant variant) {
  require_positive(f, "c_stab_real: f");
  if (variant == StabilityVariant::complex) throw std::invalid_argument("c_stab_real: use c_stab_complex");
  if (variant == StabilityVariant::real_1d) {
    if (m != 1) throw std::domain_error("c_stab_real: real_1d requires m = 1");
    f_delta = f / 4.0;
  }
  detail::check_stability_inputs(f_delta, f_r, k, nu);
  StabilityConstants s;
  s.variant = variant;
  s.f = f;
  s.f_delta = f_delta;
  s.f_r = f_r;
  s.k = k;
  s.nu = nu;
  s.m = m;
  const LowTotal lt = c_low_c_tot(f_delta, nu * std::numbers::pi / std::sqrt(f_r));
  s.c_low = lt.c_low;
  s.c_tot = lt.c_tot;
  s.c_band = c_band(k, nu).C_band;
  s.c_sym = c_sym_delta(f_delta);
  s.discriminant = stability_discriminant(variant, s.c_low, s.c_tot, s.c_band, *s.c_sym, m);
  s.c_stab = clamp_stability(s.discriminant);
  return s;
}

/// The nu grid {1.05, 1.10, ..., 2.00} of the convenience sweep.
inline std::vector<double> nu_sweep_grid() {
  std::vector<double> out;
  for (int i = 1; i <= 20; ++i) out.push_back(std::round((1.0 + 0.05 * i) * 100.0) / 100.0);
  return out;
}

struct NuSweep {
  std::vector<StabilityConstants> rows;
  std::size_t best = 0;
};

/// Evaluates `eval(nu)` over the sweep grid and records the largest constant; the caller decides whether to use it.
template <class Eval>
NuSweep sweep_nu(Eval&& eval) {
  NuSweep s;
  for (double nu : nu_sweep_grid()) s.rows.push_back(eval(nu));
  for (std::size_t i = 1; i < s.rows.size(); ++i)
    if (s.rows[i].c_stab > s.rows[s.best].c_stab) s.best = i;
  return s;
}

// ---------------------------------------------------------------- local maps

enum class MapVariant { complex, real };
enum class MapKind { stability, resolution };

inline const char* to_string(MapVariant v) { return v == MapVariant::complex ? "complex" : "real"; }
inline const char* to_string(MapKind v) { return v == MapKind::stability ? "stability" : "resolution"; }

inline MapVariant parse_map_variant(const std::string& s) {
  if (s == "complex") return MapVariant::complex;
  if (s == "real" || s == "real_m" || s == "real-m") return MapVariant::real;
  throw std::invalid_argument("unknown map variant '" + s + "'");
}

struct MapParams {
  double f = 1e4;
  int k = 7;
  double nu = 1.2;
  std::size_t pixels = 201;
  unsigned threads = 0;
  MapVariant variant = MapVariant::complex;
};

/// Local constants on the pixel lattice x_i = -1/2 + i/(n-1) over K = [-1/2, 1/2]^2 (x = 0 for n = 1).
/// values[row * n + col] belongs to (x_col, y_row).
struct ResolutionMap {
  std::size_t n = 0;
  std::vector<double> coords;
  std::vector<double> values;
  MapKind kind = MapKind::stability;
  MapParams params;
  double r = 0.0;          // stability maps
  double threshold = 0.0;  // resolution maps

  double at(std::size_t row, std::size_t col) const { return values[row * n + col]; }
  KeyValueText metadata() const {
    KeyValueText kv;
    kv.set("map", to_string(kind));
    kv.set("variant", to_string(params.variant));
    kv.set("f", params.f);
    kv.set("k", params.k);
    kv.set("nu", params.nu);
    kv.set("pixels", n);
    if (kind == MapKind::stability) kv.set("r", r);
    else kv.set("C", threshold);
    return kv;
  }
};

namespace detail {

/// Lattice numerator: x_i = (2i - (n-1)) / (2(n-1)); 1/2 - |x_i| = a_i / (2(n-1)) with a_i integer.
inline long long lattice_margin(std::size_t i, std::size_t n) {
  const long long t = 2 * static_cast<long long>(i) - static_cast<long long>(n - 1);
  return static_cast<long long>(n - 1) - std::llabs(t);
}

inline std::vector<double> lattice_coords(std::size_t n) {
  std::vector<double> c(n, 0.0);
  if (n == 1) return c;
  for (std::size_t i = 0; i < n; ++i)
    c[i] = static_cast<double>(2 * static_cast<long long>(i) - static_cast<long long>(n - 1)) /
           static_cast<double>(2 * (n - 1));
  return c;
}

/// Distance keys per pixel: complex uses min over axes of the margin, real uses the max (the widest stripe).
inline std::vector<long long> pixel_keys(std::size_t n, MapVariant v) {
  std::vector<long long> keys(n * n);
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n; ++col) {
      const long long a = n == 1 ? 1 : lattice_margin(col, n);
      const long long b = n == 1 ? 1 : lattice_margin(row, n);
      keys[row * n + col] = v == MapVariant::complex ? std::min(a, b) : std::max(a, b);
    }
  return keys;
}

inline double key_distance(long long key, std::size_t n) {
  return n == 1 ? 0.5 : static_cast<double>(key) / static_cast<double>(2 * (n - 1));
}

/// Fast C_low evaluation for a fixed f_delta: E is tabulated on [0, H] with prefix maxima and grown on demand.
class LowProfileTable {
 public:
  explicit LowProfileTable(double f_delta) : f_delta_(f_delta) {}

  double c_low(double hw) {
    grow(hw);
    const std::size_t j = std::min(static_cast<std::size_t>(hw / kProfileStep), values_.size() - 1);
    const std::size_t i = argmax_[j];
    const double lo = i == 0 ? 0.0 : (i - 1) * kProfileStep;
    const double hi = std::min((i + 1) * kProfileStep, hw);
    double best = std::max(prefmax_[j], e(hw));
    if (hi > lo) best = std::max(best, golden_max([this](double x) { return e(x); }, lo, hi).value);
    return best;
  }

 private:
  double e(double x) const { return leak_profile(f_delta_, x); }
  void grow(double hw) {
    const std::size_t need = static_cast<std::size_t>(hw / kProfileStep) + 2;
    while (values_.size() < need) {
      const std::size_t i = values_.size();
      const double v = e(i * kProfileStep);
      values_.push_back(v);
      if (i == 0 || v > prefmax_.back()) {
        prefmax_.push_back(v);
        argmax_.push_back(i);
      } else {
        prefmax_.push_back(prefmax_.back());
        argmax_.push_back(argmax_.back());
      }
    }
  }
  double f_delta_;
  std::vector<double> values_, prefmax_;
  std::vector<std::size_t> argmax_;
};

/// Largest 1/r with c(1/r) >= C for a nonincreasing c: doubling search then bisection to 1e-4 in 1/r
/// (at most 60 bisection steps). Returns 0 when even the coarsest resolution misses the threshold.
template <class C>
double bisect_resolution(C&& c, double threshold, double cap) {
  if (c(0.0) < threshold) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (c(hi) >= threshold) {
    lo = hi;
    if (hi >= cap) return hi;
    hi = std::min(2.0 * hi, cap);
  }
  for (int it = 0; it < 60 && hi - lo > 1e-4; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (c(mid) >= threshold) lo = mid;
    else hi = mid;
  }
  return lo;
}

struct LocalEngine {
  MapParams p;
  double cb;
  explicit LocalEngine(const MapParams& params) : p(params), cb(c_band(params.k, params.nu).C_band) {}

  double halfwidth(double rinv) const { return p.nu * std::numbers::pi * rinv / std::sqrt(p.f); }

  /// Resolution limit 1/r for a single margin d (f_delta = d^2 f).
  double resolution(double d, double threshold) const {
    const double fd = d * d * p.f;
    LowProfileTable table(fd);
    const double ct = c_low_c_tot(fd, 0.0).c_tot;
    const double cs = p.variant == MapVariant::real ? c_sym_delta(fd) : 0.0;
    const StabilityVariant sv = p.variant == MapVariant::real ? StabilityVariant::real_m : StabilityVariant::complex;
    auto c = [&](double rinv) {
      const double cl = std::min(table.c_low(halfwidth(rinv)), ct);
      return clamp_stability(stability_discriminant(sv, cl, ct, cb, cs, 2));
    };
    return bisect_resolution(c, threshold, 64.0 * p.f);
  }

  double stability(double d, double r) const {
    const double fd = d * d * p.f;
    const double fr = r * r * p.f;
    if (p.variant == MapVariant::complex) return c_stab_complex(fd, fr, p.k, p.nu, 2).c_stab;
    return c_stab_real(p.f, fd, fr, p.k, p.nu, 2, StabilityVariant::real_m).c_stab;
  }
};

inline void require_map_params(const MapParams& p) {
  require_positive(p.f, "map: f");
  require_spline_order(p.k);
  if (!(p.nu >= 1.0)) throw std::domain_error("map: nu must be >= 1");
  if (p.pixels < 1) throw std::domain_error("map: need at least one pixel");
}

/// Evaluates `per_key(d)` once per distinct key, in parallel, and returns a key -> value table.
template <class F>
std::map<long long, double> evaluate_keys(const std::vector<long long>& all_keys, std::size_t n, unsigned threads,
                                          F&& per_key) {
  std::vector<long long> keys(all_keys);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<double> vals(keys.size());
  parallel_for(keys.size(), threads, [&](std::size_t i) { vals[i] = per_key(key_distance(keys[i], n)); });
  std::map<long long, double> out;
  for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] = vals[i];
  return out;
}

/// Real variant: the local value is a supremum over all stripe margins d in (0, d_max(x)], taken over the lattice margins.
inline std::map<long long, double> prefix_sup(const std::map<long long, double>& per_key) {
  std::map<long long, double> out;
  double run = 0.0;
  for (const auto& [k, v] : per_key) {
    if (k > 0) run = std::max(run, v);
    out[k] = run;
  }
  return out;
}

}  // namespace detail

/// c_stab,r(x) on K = [-1/2, 1/2]^2. Complex: C_stab(dist(x, dK)^2 f, r^2 f, k, nu). Real: sup of the real
/// square-domain constant over stripe-union margins d with x in the union of S_{d,j}.
inline ResolutionMap stability_map(const MapParams& p, double r) {
  detail::require_map_params(p);
  require_positive(r, "stability_map: r");
  ResolutionMap out;
  out.n = p.pixels;
  out.coords = detail::lattice_coords(p.pixels);
  out.kind = MapKind::stability;
  out.params = p;
  out.r = r;
  const detail::LocalEngine eng(p);
  auto keys = detail::pixel_keys(p.pixels, p.variant);
  if (p.variant == MapVariant::real && p.pixels > 1) {
    // every lattice margin up to the largest one is a candidate
    const long long kmax = *std::max_element(keys.begin(), keys.end());
    for (long long q = 1; q <= kmax; ++q) keys.push_back(q);
  }
  auto table = detail::evaluate_keys(keys, p.pixels, p.threads, [&](double d) { return d > 0.0 ? eng.stability(d, r) : 0.0; });
  if (p.variant == MapVariant::real) table = detail::prefix_sup(table);
  const auto pk = detail::pixel_keys(p.pixels, p.variant);
  out.values.resize(pk.size());
  for (std::size_t i = 0; i < pk.size(); ++i) out.values[i] = table.at(pk[i]);
  return out;
}

/// 1/r_stab,C(x): the largest 1/r whose local stability constant still reaches C.
inline ResolutionMap resolution_map(const MapParams& p, double threshold) {
  detail::require_map_params(p);
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::domain_error("resolution_map: C must lie in (0, 1)");
  ResolutionMap out;
  out.n = p.pixels;
  out.coords = detail::lattice_coords(p.pixels);
  out.kind = MapKind::resolution;
  out.params = p;
  out.threshold = threshold;
  const detail::LocalEngine eng(p);
  auto keys = detail::pixel_keys(p.pixels, p.variant);
  if (p.variant == MapVariant::real && p.pixels > 1) {
    const long long kmax = *std::max_element(keys.begin(), keys.end());
    for (long long q = 1; q <= kmax; ++q) keys.push_back(q);
  }
  auto table = detail::evaluate_keys(keys, p.pixels, p.threads, [&](double d) {
    if (p.variant == MapVariant::real && d == 0.0) return 0.0;
    return eng.resolution(d, threshold);
  });
  if (p.variant == MapVariant::real) table = detail::prefix_sup(table);
  const auto pk = detail::pixel_keys(p.pixels, p.variant);
  out.values.resize(pk.size());
  for (std::size_t i = 0; i < pk.size(); ++i) out.values[i] = table.at(pk[i]);
  return out;
}

/// Best-case resolution 1/r(x) <= f dist(x, dK) / pi (complex) or f dist_sym(x, dK) / pi (real).
inline double wavepacket_resolution_bound(const Point& x, const DomainSpec& K, double f, MapVariant variant) {
  require_positive(f, "wavepacket_resolution_bound: f");
  if (!K.contains(x)) throw std::domain_error("wavepacket_resolution_bound: x must lie in K");
  if (!K.is_convex()) throw std::domain_error("wavepacket_resolution_bound: K must be convex");
  const double d = variant == MapVariant::complex ? dist_boundary(x, K).value : dist_sym(x, K);
  return f * d / std::numbers::pi;
}

}  // namespace fresnel
