#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fresnel/bounds.hpp"
#include "fresnel/fft.hpp"
#include "fresnel/geometry.hpp"
#include "fresnel/grid.hpp"
#include "fresnel/io.hpp"
#include "fresnel/lanczos.hpp"
#include "fresnel/propagation.hpp"

namespace fresnel {

enum class CtfKind { T_complex_input, S_alpha_real_input };

/// Linearised contrast model: T(h) = 2 Re(D(h)) for complex h, S_alpha(phi) = T(-i e^{-i alpha} phi) for real phi.
struct CtfOperatorSpec {
  double f = 1.0;
  double alpha = 0.0;
  CtfKind kind = CtfKind::T_complex_input;

  void validate() const {
    require_positive(f, "CtfOperatorSpec: f");
    if (!(alpha >= 0.0 && alpha < std::numbers::pi)) throw std::domain_error("CtfOperatorSpec: alpha must lie in [0, pi)");
  }
};

/// Fourier symbol s_alpha(xi) = sin(|xi|^2 / (2 f) + alpha); S_alpha multiplies by -2 s_alpha.
inline double ctf_sine(double xi_sq, double f, double alpha) { return std::sin(xi_sq / (2.0 * f) + alpha); }

inline bool is_real_field(const ComplexField& fld, double rel_tol = 1e-12) {
  double mx = 0.0, im = 0.0;
  for (const auto& v : fld.samples) {
    mx = std::max(mx, std::abs(v));
    im = std::max(im, std::fabs(v.imag()));
  }
  return im <= rel_tol * std::max(mx, 1e-300);
}

/// Applies T or S_alpha on the periodic grid of `field`; the result has zero imaginary part.
inline ComplexField apply_ctf(const ComplexField& field, const CtfOperatorSpec& spec) {
  spec.validate();
  ComplexField out = field;
  if (spec.kind == CtfKind::T_complex_input) {
    apply_fresnel_multiplier(out.samples, out.grid, spec.f);
  } else {
    if (!is_real_field(field)) throw std::invalid_argument("apply_ctf: S_alpha requires a real-valued input");
    const double f = spec.f, al = spec.alpha;
    apply_multiplier(out.samples, out.grid, [f, al](const Point& xi) {
      return cplx(-2.0 * ctf_sine(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2], f, al), 0.0);
    });
    for (auto& v : out.samples) v = cplx(v.real(), 0.0);
    return out;
  }
  for (auto& v : out.samples) v = cplx(2.0 * v.real(), 0.0);
  return out;
}

struct PhaselessLeakage {
  double bound = 0.0;            // 2 ||filter * F(h)||
  double measured_ctf = 0.0;     // ||T(h)|_{complement K}||
  double measured_fresnel = 0.0; // ||D(h)|_{complement K}||
};

/// Leakage of linearised contrast data outside K, bounded by twice the Fresnel leakage filter bound.
inline PhaselessLeakage phaseless_leakage_bound(const ComplexField& h, const DomainSpec& K, const LeakageFilter& filter,
                                               const PropagateOptions& opts = {}) {
  PhaselessLeakage r;
  r.bound = 2.0 * filtered_norm(filter, h);
  const ComplexField d = propagate_fft(h, FresnelParams(filter.f, h.grid.m), opts);
  ComplexField t = d;
  for (auto& v : t.samples) v = cplx(2.0 * v.real(), 0.0);
  r.measured_fresnel = leakage_norm(d, K).outside;
  r.measured_ctf = leakage_norm(t, K).outside;
  return r;
}

// ---------------------------------------------------------------- full field-of-view constant

struct FullFovLevel {
  int points_across = 0;  // samples across the width of Omega
  std::size_t grid = 0;   // periodic grid points per axis
  std::size_t unknowns = 0;
  int iterations = 0;
  double value = 0.0;
};

struct FullFovConstant {
  DomainSpec omega;
  double f = 0.0;
  std::optional<double> alpha;
  double value = 0.0;        // extrapolated when the history is monotone, finest level otherwise
  double finest = 0.0;
  double extrapolated = 0.0;
  double order = 0.0;        // fitted convergence order in the spacing
  bool monotone = false;
  int grid_resolution = 0;   // finest points_across
  std::vector<FullFovLevel> convergence_history;

  KeyValueText report() const {
    KeyValueText kv;
    kv.set("omega", omega.describe());
    kv.set("problem", alpha ? "S_alpha (real objects)" : "T (complex objects)");
    kv.set("f", f);
    if (alpha) kv.set("alpha", *alpha);
    for (std::size_t i = 0; i < convergence_history.size(); ++i) {
      const auto& l = convergence_history[i];
      const std::string p = "level" + std::to_string(i) + ".";
      kv.set(p + "points_across", l.points_across);
      kv.set(p + "grid", l.grid);
      kv.set(p + "unknowns", l.unknowns);
      kv.set(p + "iterations", l.iterations);
      kv.set(p + "value", l.value);
    }
    kv.set("monotone", monotone);
    kv.set("order", order);
    kv.set("finest", finest);
    kv.set("extrapolated", extrapolated);
    kv.set("value", value);
    return kv;
  }
};

struct FullFovOptions {
  std::vector<int> ladder;        // points across Omega; empty selects three levels under max_grid
  std::size_t max_grid = 512;
  double rel_tol = 1e-4;
  int max_iter = 1500;
  std::string cache_dir;          // empty disables the disk cache
};

namespace detail {

inline double omega_width(const DomainSpec& omega) {
  if (omega.kind == DomainKind::ball) return 2.0 * omega.radius;
  if (omega.kind == DomainKind::box || omega.kind == DomainKind::interval) {
    double w = 0.0;
    for (int a = 0; a < omega.m; ++a) w = std::max(w, 2.0 * omega.half_widths[a]);
    return w;
  }
  throw std::invalid_argument("fullfov: omega must be a ball or a box");
}

/// Periodic grid size for `n_in` samples across a domain of width w: the padding exceeds the lateral
/// reach 2 xi_max / f of the chirp kernel so the periodic convolution equals the free-space one on Omega.
inline std::size_t fullfov_grid_size(double w, double f, int n_in) {
  const double dx = w / n_in;
  const double xi_max = std::numbers::pi / dx;
  const double len = w + 2.0 * xi_max / f + 0.2 * w;
  auto n = static_cast<std::size_t>(std::ceil(len / dx));
  return n + (n % 2);
}

/// Three levels with the finest grid under max_grid. Balls use dyadic levels so the covering cell sets nest;
/// boxes use even counts so the box edges stay on cell faces.
inline std::vector<int> default_ladder(const DomainSpec& omega, double f, std::size_t max_grid) {
  const double w = omega_width(omega);
  int top = 2;
  while (fullfov_grid_size(w, f, top + 2) <= max_grid) top += 2;
  if (omega.kind == DomainKind::ball) {
    top -= top % 4;
    return {top / 4, top / 2, top};
  }
  auto even = [](double v) { return std::max(2, 2 * static_cast<int>(std::lround(v / 2.0))); };
  return {even(0.5 * top), even(0.75 * top), top};
}

struct FullFovOperator {
  Grid grid;
  std::vector<std::size_t> support;
  std::vector<double> sym_s, sym_c;  // sin and cos symbols (cos only for T)
  bool complex_objects = false;

  std::size_t unknowns() const { return complex_objects ? 2 * support.size() : support.size(); }

  void apply(const std::vector<double>& v, std::vector<double>& out) const {
    const std::size_t n = support.size();
    out.assign(unknowns(), 0.0);
    if (!complex_objects) {
      std::vector<cplx> g(grid.size(), cplx(0.0, 0.0));
      for (std::size_t i = 0; i < n; ++i) g[support[i]] = v[i];
      Fft::forward(g, grid);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= sym_s[i] * sym_s[i];
      Fft::inverse(g, grid);
      for (std::size_t i = 0; i < n; ++i) out[i] = g[support[i]].real();
      return;
    }
    std::vector<cplx> p(grid.size(), cplx(0.0, 0.0)), q(grid.size(), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      p[support[i]] = v[i];
      q[support[i]] = v[n + i];
    }
    Fft::forward(p, grid);
    Fft::forward(q, grid);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const cplx z = sym_s[i] * p[i] + sym_c[i] * q[i];
      p[i] = sym_s[i] * z;
      q[i] = sym_c[i] * z;
    }
    Fft::inverse(p, grid);
    Fft::inverse(q, grid);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = p[support[i]].real();
      out[n + i] = q[support[i]].real();
    }
  }
};

/// Normal operator of S_alpha (real objects) or of T on h = -i phi - mu (complex objects), restricted to Omega.
/// The grid is cell-centred about the centre of Omega. Boxes take the cells inside the box; balls take every
/// cell meeting the closed ball, so the rasterised domain contains Omega.
inline FullFovOperator build_fullfov_operator(const DomainSpec& omega, double f, std::optional<double> alpha, int n_in) {
  const double w = omega_width(omega);
  const int m = omega.m;
  const std::size_t n = fullfov_grid_size(w, f, n_in);
  const double dx = w / n_in;
  FullFovOperator op;
  const bool box = omega.kind != DomainKind::ball;
  Point off{0.0, 0.0, 0.0};
  for (int a = 0; a < m; ++a) off[a] = omega.center[a] + 0.5 * dx;
  op.grid = Grid(m, n, static_cast<double>(n) * dx, off);
  op.complex_objects = !alpha.has_value();
  for (std::size_t i = 0; i < op.grid.size(); ++i) {
    const Point x = op.grid.point(i);
    bool in = true;
    if (box) {
      for (int a = 0; a < m; ++a) in = in && std::fabs(x[a] - omega.center[a]) <= omega.half_widths[a] + 1e-12;
    } else {
      // every cell meeting the closed ball
      double s = 0.0;
      for (int a = 0; a < m; ++a) {
        const double e = std::max(std::fabs(x[a] - omega.center[a]) - 0.5 * dx, 0.0);
        s += e * e;
      }
      in = s <= omega.radius * omega.radius + 1e-12;
    }
    if (in) op.support.push_back(i);
  }
  const double al = alpha.value_or(0.0);
  op.sym_s.resize(op.grid.size());
  if (op.complex_objects) op.sym_c.resize(op.grid.size());
  for (std::size_t i = 0; i < op.grid.size(); ++i) {
    const Point xi = op.grid.frequency(i);
    const double chi = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]) / (2.0 * f);
    op.sym_s[i] = std::sin(chi + al);
    if (op.complex_objects) op.sym_c[i] = std::cos(chi);
  }
  return op;
}

/// Richardson extrapolation v(h) = v0 + c h^p through three levels; p fitted and clamped to [0.5, 4].
inline void richardson(const std::vector<double>& h, const std::vector<double>& v, double& v0, double& p) {
  const std::size_t k = v.size();
  const double h1 = h[k - 3], h2 = h[k - 2], h3 = h[k - 1];
  const double d12 = v[k - 3] - v[k - 2], d23 = v[k - 2] - v[k - 1];
  auto ratio = [&](double q) { return (std::pow(h1, q) - std::pow(h2, q)) / (std::pow(h2, q) - std::pow(h3, q)); };
  const double target = d23 != 0.0 ? d12 / d23 : 0.0;
  double lo = 0.5, hi = 4.0;
  if (target <= ratio(lo)) p = lo;
  else if (target >= ratio(hi)) p = hi;
  else {
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (ratio(mid) < target) lo = mid;
      else hi = mid;
    }
    p = 0.5 * (lo + hi);
  }
  const double c = d23 / (std::pow(h2, p) - std::pow(h3, p));
  v0 = v[k - 1] - c * std::pow(h3, p);
}

inline std::string fullfov_cache_key(const DomainSpec& omega, double f, std::optional<double> alpha,
                                     const std::vector<int>& ladder, double tol) {
  KeyValueText kv;
  kv.set("omega", omega.describe());
  kv.set("f", f);
  kv.set("alpha", alpha ? format_double(*alpha) : std::string("none"));
  std::string lad;
  for (int n : ladder) lad += (lad.empty() ? "" : ",") + std::to_string(n);
  kv.set("ladder", lad);
  kv.set("tol", tol);
  return kv.hash();
}

}  // namespace detail

/// Cache directory from FRESNEL_CACHE_DIR, else $XDG_CACHE_HOME/fresnel-fov or ~/.cache/fresnel-fov.
inline std::string default_cache_dir() {
  if (const char* d = std::getenv("FRESNEL_CACHE_DIR"); d && *d) return d;
  if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) return std::string(x) + "/fresnel-fov";
  if (const char* h = std::getenv("HOME"); h && *h) return std::string(h) + "/.cache/fresnel-fov";
  return ".fresnel-cache";
}

/// Smallest singular value of S_alpha (alpha given) or T (no alpha) on fields supported in Omega, with an
/// infinite detector. Computed as 2 sqrt(lambda_min) of the discretised normal operator on a grid ladder.
inline FullFovConstant fullfov_stability_constant(const DomainSpec& omega, double f, std::optional<double> alpha,
                                                  const FullFovOptions& opt = {}) {
  require_positive(f, "fullfov_stability_constant: f");
  omega.validate();
  if (alpha && !(*alpha >= 0.0 && *alpha < std::numbers::pi))
    throw std::domain_error("fullfov_stability_constant: alpha must lie in [0, pi)");
  const double w = detail::omega_width(omega);
  std::vector<int> ladder = opt.ladder.empty() ? detail::default_ladder(omega, f, opt.max_grid) : opt.ladder;
  if (ladder.size() < 3) throw std::invalid_argument("fullfov_stability_constant: need at least three grid levels");
  if (!std::is_sorted(ladder.begin(), ladder.end())) throw std::invalid_argument("fullfov_stability_constant: ladder must increase");

  std::string cache_file;
  if (!opt.cache_dir.empty()) {
    cache_file = opt.cache_dir + "/fullfov-" + detail::fullfov_cache_key(omega, f, alpha, ladder, opt.rel_tol) + ".txt";
    if (std::filesystem::exists(cache_file)) {
      const KeyValueText kv = KeyValueText::read(cache_file);
      FullFovConstant c;
      c.omega = omega;
      c.f = f;
      c.alpha = alpha;
      for (std::size_t i = 0; kv.has("level" + std::to_string(i) + ".value"); ++i) {
        const std::string p = "level" + std::to_string(i) + ".";
        FullFovLevel l;
        l.points_across = std::stoi(kv.get(p + "points_across"));
        l.grid = std::stoul(kv.get(p + "grid"));
        l.unknowns = std::stoul(kv.get(p + "unknowns"));
        l.iterations = std::stoi(kv.get(p + "iterations"));
        l.value = kv.get_double(p + "value");
        c.convergence_history.push_back(l);
      }
      c.monotone = kv.get("monotone") == "true";
      c.order = kv.get_double("order");
      c.finest = kv.get_double("finest");
      c.extrapolated = kv.get_double("extrapolated");
      c.value = kv.get_double("value");
      c.grid_resolution = ladder.back();
      return c;
    }
  }

  FullFovConstant c;
  c.omega = omega;
  c.f = f;
  c.alpha = alpha;
  std::vector<double> hs, vs;
  for (int n_in : ladder) {
    const auto op = detail::build_fullfov_operator(omega, f, alpha, n_in);
    if (op.grid.n > opt.max_grid) throw std::invalid_argument("fullfov_stability_constant: grid exceeds max_grid");
    LanczosOptions lo;
    lo.rel_tol = opt.rel_tol;
    lo.max_iter = opt.max_iter;
    const LanczosResult r = lanczos_extreme([&op](const std::vector<double>& x, std::vector<double>& y) { op.apply(x, y); },
                                            op.unknowns(), SpectrumEnd::smallest, lo);
    FullFovLevel l;
    l.points_across = n_in;
    l.grid = op.grid.n;
    l.unknowns = op.unknowns();
    l.iterations = r.iterations;
    l.value = 2.0 * std::sqrt(std::max(r.value, 0.0));
    c.convergence_history.push_back(l);
    hs.push_back(w / n_in);
    vs.push_back(l.value);
  }
  c.grid_resolution = ladder.back();
  c.finest = vs.back();
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < vs.size(); ++i) {
    inc = inc && vs[i] >= vs[i - 1];
    dec = dec && vs[i] <= vs[i - 1];
  }
  c.monotone = inc || dec;
  detail::richardson(hs, vs, c.extrapolated, c.order);
  c.value = c.monotone ? std::clamp(c.extrapolated, 0.0, 2.0) : c.finest;
  if (!cache_file.empty()) {
    std::filesystem::create_directories(opt.cache_dir);
    c.report().write(cache_file);
  }
  return c;
}

// ---------------------------------------------------------------- assembled guarantee

/// Delta such that Omega lies in [-1/2 + Delta, 1/2 - Delta]^m.
inline double margin_in_unit_box(const DomainSpec& omega) {
  const auto [lo, hi] = omega.bounding_box();
  double d = 0.5;
  for (int a = 0; a < omega.m; ++a) d = std::min({d, 0.5 + lo[a], 0.5 - hi[a]});
  return d;
}

/// (C_IP^2 - 4 (1 - C_stab^{2m}))^{1/2}, or 0 when the bracket is negative.
inline double xpci_guarantee(double c_ip, double c_stab, int m) {
  const double v = c_ip * c_ip - 4.0 * (1.0 - std::pow(c_stab, 2 * m));
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

struct PhaselessBound {
  double delta = 0.0;
  double c_ip = 0.0;
  StabilityConstants spline;
  double guarantee = 0.0;
  double bracket = 0.0;

  KeyValueText report() const {
    KeyValueText kv = spline.report();
    kv.set("delta", delta);
    kv.set("c_ip", c_ip);
    kv.set("bracket", bracket);
    kv.set("xpci_guarantee", guarantee);
    return kv;
  }
};

/// Stability guarantee for linearised contrast data on the detector [-1/2, 1/2]^m for spline objects of
/// resolution r supported in Omega, given the infinite-detector constant c_ip.
inline PhaselessBound phaseless_stability_bound(const DomainSpec& omega, double f, double c_ip, double r, int k, double nu) {
  PhaselessBound b;
  b.delta = margin_in_unit_box(omega);
  if (!(b.delta > 0.0)) throw std::domain_error("phaseless_stability_bound: Omega must lie strictly inside the detector");
  b.c_ip = c_ip;
  b.spline = c_stab_complex(b.delta * b.delta * f, r * r * f, k, nu, omega.m);
  b.bracket = c_ip * c_ip - 4.0 * (1.0 - std::pow(b.spline.c_stab, 2 * omega.m));
  b.guarantee = xpci_guarantee(c_ip, b.spline.c_stab, omega.m);
  return b;
}

/// Parameters and stated values of the three worked examples.
struct XpciExample {
  std::string name;
  DomainSpec omega;
  double f = 0.0;
  std::optional<double> alpha;
  double rinv = 0.0;
  double nu = 1.0;
  int k = 7;
  double stated_c_ip = 0.0;
  double stated_c_stab = 0.0;  // stated C_stab^m
  double stated_guarantee = 0.0;
};

inline std::vector<XpciExample> xpci_examples() {
  return {
      {"example1", DomainSpec::centered_box(2, 0.05), 2e3, std::nullopt, 190.0, 1.2, 7, 0.328, 0.988, 0.12},
      {"example2", DomainSpec::ball(2, {0, 0, 0}, 0.1), 5e3, 0.0, 350.0, 1.25, 7, 0.151, 0.997, 0.05},
      {"example3", DomainSpec::ball(2, {0, 0, 0}, 0.25), 4e4, std::atan(0.1), 2000.0, 1.25, 7, 0.147, 0.998, 0.08},
  };
}

}  // namespace fresnel
