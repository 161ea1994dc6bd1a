#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fresnel/fft.hpp"
#include "fresnel/geometry.hpp"
#include "fresnel/grid.hpp"
#include "fresnel/specfun.hpp"

namespace fresnel {

using FieldEvaluator = std::function<cplx(const Point&)>;

/// Raised when propagated energy reaches the periodic boundary band of the grid.
class WrapAroundError : public std::runtime_error {
 public:
  WrapAroundError(double fraction, double tol)
      : std::runtime_error("wrap-around guard: boundary-band energy fraction " + std::to_string(fraction) +
                           " exceeds " + std::to_string(tol)),
        boundary_fraction(fraction) {}
  double boundary_fraction;
};

struct PropagateOptions {
  bool guard = true;
  double guard_tol = 1e-8;
  double band = 0.05;
};

/// Fresnel factor m_f(xi) = exp(-i |xi|^2 / (2 f)).
inline cplx fresnel_factor(double xi_sq, double f) { return std::polar(1.0, -xi_sq / (2.0 * f)); }

/// Fraction of the squared norm lying within `band` * extent of the grid boundary.
inline double boundary_band_fraction(const ComplexField& fld, double band = 0.05) {
  const Grid& g = fld.grid;
  const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(band * static_cast<double>(g.n))));
  double edge = 0.0, total = 0.0;
  for (std::size_t i = 0; i < fld.samples.size(); ++i) {
    const double e = std::norm(fld.samples[i]);
    total += e;
    const auto ij = g.unflatten(i);
    bool in_band = false;
    for (int a = 0; a < g.m; ++a)
      if (ij[a] < w || ij[a] >= g.n - w) in_band = true;
    if (in_band) edge += e;
  }
  return total > 0.0 ? edge / total : 0.0;
}

/// Applies the Fresnel multiplier along the axes flagged in `axes` (all axes gives D itself).
inline void apply_fresnel_multiplier(std::vector<cplx>& data, const Grid& g, double f,
                                     std::array<bool, 3> axes = {true, true, true}) {
  std::vector<std::vector<cplx>> sym(g.m, std::vector<cplx>(g.n, cplx(1.0, 0.0)));
  for (int a = 0; a < g.m; ++a) {
    if (!axes[a]) continue;
    for (std::size_t j = 0; j < g.n; ++j) {
      const double w = g.freq(j);
      sym[a][j] = fresnel_factor(w * w, f);
    }
  }
  apply_separable_multiplier(data, g, sym);
}

/// Discrete Fresnel propagation D on the periodic grid of `field`.
inline ComplexField propagate_fft(const ComplexField& field, const FresnelParams& params,
                                  const PropagateOptions& opts = {}) {
  params.validate();
  if (field.grid.m != params.m) throw std::invalid_argument("propagate_fft: dimension mismatch");
  ComplexField out = field;
  apply_fresnel_multiplier(out.samples, out.grid, params.f);
  if (opts.guard) {
    const double frac = boundary_band_fraction(out, opts.band);
    if (frac > opts.guard_tol) throw WrapAroundError(frac, opts.guard_tol);
  }
  return out;
}

/// Embeds `field` centred into a grid with `factor` times as many points per axis and the same spacing.
inline ComplexField zero_pad(const ComplexField& field, std::size_t factor) {
  const Grid& g = field.grid;
  if (g.n % 2 != 0) throw std::invalid_argument("zero_pad: need an even point count");
  Grid big(g.m, g.n * factor, g.extent * static_cast<double>(factor), g.origin_offset);
  ComplexField out(big);
  const std::size_t shift = big.n / 2 - g.n / 2;
  for (std::size_t i = 0; i < field.samples.size(); ++i) {
    const auto ij = g.unflatten(i);
    std::size_t idx = 0;
    for (int a = 0; a < g.m; ++a) idx = idx * big.n + ij[a] + shift;
    out.samples[idx] = field.samples[i];
  }
  return out;
}

/// Propagation with adaptive padding: doubles the grid until the wrap-around guard passes.
inline ComplexField propagate_fft_padded(const ComplexField& field, const FresnelParams& params,
                                         std::size_t max_points = std::size_t{1} << 22,
                                         const PropagateOptions& opts = {}) {
  ComplexField cur = field;
  double last = 0.0;
  while (true) {
    PropagateOptions o = opts;
    o.guard = false;
    ComplexField out = propagate_fft(cur, params, o);
    last = boundary_band_fraction(out, opts.band);
    if (last <= opts.guard_tol) return out;
    if (cur.samples.size() * (std::size_t{1} << cur.grid.m) > max_points) break;
    cur = zero_pad(cur, 2);
  }
  throw WrapAroundError(last, opts.guard_tol);
}

/// Exact propagation of the normalised Gaussian p_sigma.
struct GaussianBeam {
  double sigma = 0.0;
  double sigma_prop = 0.0;
  double eta_sq = 0.0;
  cplx amplitude_phase{1.0, 0.0};
  cplx variance{0.0, 0.0};  // sigma^2 + i/f
  int m = 1;
  double f = 1.0;

  /// D(p_sigma)(x) = (2 pi a)^{-m/2} exp(-|x|^2 / (2a)) with a = sigma^2 + i/f and the principal root.
  cplx operator()(const Point& x) const {
    double r2 = 0.0;
    for (int j = 0; j < m; ++j) r2 += x[j] * x[j];
    return std::pow(2.0 * std::numbers::pi * variance, -0.5 * m) * std::exp(-r2 / (2.0 * variance));
  }
};

/// Normalised Gaussian (2 pi sigma^2)^{-m/2} exp(-|x|^2/(2 sigma^2)).
inline double gaussian_density(const Point& x, double sigma, int m) {
  double r2 = 0.0;
  for (int j = 0; j < m; ++j) r2 += x[j] * x[j];
  return std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.5 * m) * std::exp(-r2 / (2.0 * sigma * sigma));
}

inline GaussianBeam propagate_gaussian(double sigma, const FresnelParams& params) {
  params.validate();
  require_positive(sigma, "propagate_gaussian: sigma");
  GaussianBeam b;
  b.sigma = sigma;
  b.m = params.m;
  b.f = params.f;
  const double s4f2 = std::pow(sigma, 4) * params.f * params.f;
  b.eta_sq = (1.0 + s4f2) / params.f;
  b.sigma_prop = std::sqrt(b.eta_sq / (sigma * sigma * params.f));
  b.variance = cplx(sigma * sigma, 1.0 / params.f);
  b.amplitude_phase = std::polar(1.0, -0.5 * params.m * std::arg(b.variance));
  return b;
}

enum class PacketKind { complex, real };

/// h(x) = exp(i xi.(x-a)) p_sigma(x-a) (complex) or cos(xi.(x-a) + beta) p_sigma(x-a) (real).
struct WavePacket {
  Point xi{0.0, 0.0, 0.0};
  Point a{0.0, 0.0, 0.0};
  double sigma = 0.1;
  double beta = 0.0;
  PacketKind kind = PacketKind::complex;
  int m = 1;

  void validate() const {
    require_positive(sigma, "WavePacket: sigma");
    if (m < 1 || m > 3) throw std::domain_error("WavePacket: m must be 1, 2 or 3");
  }

  cplx operator()(const Point& x) const {
    Point y{0.0, 0.0, 0.0};
    double ph = 0.0;
    for (int j = 0; j < m; ++j) {
      y[j] = x[j] - a[j];
      ph += xi[j] * y[j];
    }
    const double env = gaussian_density(y, sigma, m);
    if (kind == PacketKind::complex) return std::polar(env, ph);
    return {env * std::cos(ph + beta), 0.0};
  }

  /// Propagated centres: a + xi/f for complex packets, a +- xi/f for real ones.
  std::vector<Point> propagated_centres(double f) const {
    Point p = a, q = a;
    for (int j = 0; j < m; ++j) {
      p[j] += xi[j] / f;
      q[j] -= xi[j] / f;
    }
    if (kind == PacketKind::complex) return {p};
    return {p, q};
  }
};

/// Analytic evaluator of D(h) for a wave packet.
inline FieldEvaluator propagate_wave_packet(const WavePacket& packet, const FresnelParams& params) {
  packet.validate();
  params.validate();
  if (packet.m != params.m) throw std::invalid_argument("propagate_wave_packet: dimension mismatch");
  const GaussianBeam beam = propagate_gaussian(packet.sigma, params);
  const double f = params.f;
  auto shifted = [beam, f, a = packet.a, m = packet.m](const Point& x, const Point& xi) {
    Point y{0.0, 0.0, 0.0};
    double ph = 0.0, xi2 = 0.0;
    for (int j = 0; j < m; ++j) {
      y[j] = x[j] - a[j] - xi[j] / f;
      ph += xi[j] * y[j];
      xi2 += xi[j] * xi[j];
    }
    return std::polar(1.0, ph + xi2 / (2.0 * f)) * beam(y);
  };
  if (packet.kind == PacketKind::complex) return [shifted, xi = packet.xi](const Point& x) { return shifted(x, xi); };
  const Point xi = packet.xi;
  const Point mxi{-xi[0], -xi[1], -xi[2]};
  const cplx ep = std::polar(0.5, packet.beta), em = std::polar(0.5, -packet.beta);
  return [shifted, xi, mxi, ep, em](const Point& x) { return ep * shifted(x, xi) + em * shifted(x, mxi); };
}

/// Translates samples: out(x) = in(x - shift), exactly by index roll when the shift is a grid multiple,
/// otherwise by a Fourier phase ramp if `interpolate` is set.
inline std::vector<cplx> translate_field(const std::vector<cplx>& in, const Grid& g, const Point& shift,
                                         bool interpolate) {
  const double dx = g.spacing();
  std::array<long long, 3> steps{0, 0, 0};
  bool exact = true;
  for (int a = 0; a < g.m; ++a) {
    const double q = shift[a] / dx;
    const double r = std::round(q);
    if (std::fabs(q - r) > 1e-9) exact = false;
    steps[a] = static_cast<long long>(r);
  }
  if (exact) {
    std::vector<cplx> out(in.size());
    const long long n = static_cast<long long>(g.n);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const auto ij = g.unflatten(i);
      std::size_t idx = 0;
      for (int a = 0; a < g.m; ++a) {
        long long t = (static_cast<long long>(ij[a]) + steps[a]) % n;
        if (t < 0) t += n;
        idx = idx * g.n + static_cast<std::size_t>(t);
      }
      out[idx] = in[i];
    }
    return out;
  }
  if (!interpolate) throw std::invalid_argument("translate_field: shift is not a multiple of the grid spacing");
  std::vector<cplx> out = in;
  apply_multiplier(out, g, [&](const Point& w) {
    double ph = 0.0;
    for (int a = 0; a < g.m; ++a) ph -= w[a] * shift[a];
    return std::polar(1.0, ph);
  });
  return out;
}

/// Relative L2 residual of D(e_xi f) = m_f(xi) e_xi T_{-xi/f} D(f) on the grid of `field`.
inline double freq_shift_identity_residual(const ComplexField& field, const Point& xi, const FresnelParams& params,
                                           bool interpolate = false) {
  params.validate();
  const Grid& g = field.grid;
  double xi2 = 0.0;
  for (int a = 0; a < g.m; ++a) xi2 += xi[a] * xi[a];
  std::vector<cplx> mod(field.samples.size());
  auto mode = [&](std::size_t i) {
    const Point x = g.point(i);
    double ph = 0.0;
    for (int a = 0; a < g.m; ++a) ph += xi[a] * x[a];
    return std::polar(1.0, ph);
  };
  for (std::size_t i = 0; i < mod.size(); ++i) mod[i] = mode(i) * field.samples[i];
  apply_fresnel_multiplier(mod, g, params.f);

  std::vector<cplx> base = field.samples;
  apply_fresnel_multiplier(base, g, params.f);
  Point shift{0.0, 0.0, 0.0};
  for (int a = 0; a < g.m; ++a) shift[a] = xi[a] / params.f;
  std::vector<cplx> rhs = translate_field(base, g, shift, interpolate);
  const cplx mf = fresnel_factor(xi2, params.f);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const cplx r = mf * mode(i) * rhs[i];
    num += std::norm(mod[i] - r);
    den += std::norm(mod[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Exact evaluator of D(1_K) for half-spaces, stripes, intervals, boxes, their complements and the empty set.
inline FieldEvaluator propagate_indicator(const DomainSpec& K, const FresnelParams& params) {
  params.validate();
  const double sf = std::sqrt(params.f);
  const double f = params.f;
  switch (K.kind) {
    case DomainKind::half_space:
      return [K, sf](const Point& x) { return theta_tilde(sf * (K.dot_normal(x) - K.offset)); };
    case DomainKind::stripe: {
      const double fd = K.half_width * K.half_width * f;
      return [K, sf, fd](const Point& x) { return iota_tilde(fd, sf * (K.dot_normal(x) - K.offset)); };
    }
    case DomainKind::interval:
    case DomainKind::box:
      return [K, sf, f](const Point& x) {
        cplx v(1.0, 0.0);
        for (int a = 0; a < K.m; ++a)
          v *= iota_tilde(K.half_widths[a] * K.half_widths[a] * f, sf * (x[a] - K.center[a]));
        return v;
      };
    case DomainKind::complement: {
      if (K.inner->kind == DomainKind::complement)
        throw std::invalid_argument("propagate_indicator: nested complements unsupported");
      FieldEvaluator in = propagate_indicator(*K.inner, params);
      return [in](const Point& x) { return cplx(1.0, 0.0) - in(x); };
    }
    case DomainKind::empty: return [](const Point&) { return cplx(0.0, 0.0); };
    case DomainKind::ball: break;
  }
  throw std::invalid_argument("propagate_indicator: no closed form for " + K.describe());
}

struct LeakageNorms {
  double inside = 0.0;
  double outside = 0.0;
  double total() const { return std::hypot(inside, outside); }
};

/// Masked norms of `field` inside and outside the detector K.
inline LeakageNorms leakage_norm(const ComplexField& field, const DomainSpec& K) {
  const Grid& g = field.grid;
  if (K.m != g.m) throw std::invalid_argument("leakage_norm: dimension mismatch");
  const DomainSpec& bounded = K.kind == DomainKind::complement ? *K.inner : K;
  const auto [lo, hi] = bounded.bounding_box();
  for (int a = 0; a < g.m; ++a) {
    if (std::isfinite(lo[a]) && (lo[a] < g.lower(a) || hi[a] > g.upper(a)))
      throw std::invalid_argument("leakage_norm: detector exceeds grid extent");
  }
  double in = 0.0, out = 0.0;
  for (std::size_t i = 0; i < field.samples.size(); ++i) {
    const double e = std::norm(field.samples[i]);
    if (K.contains(g.point(i))) in += e;
    else out += e;
  }
  const double v = g.cell_volume();
  return {std::sqrt(in * v), std::sqrt(out * v)};
}

}  // namespace fresnel
