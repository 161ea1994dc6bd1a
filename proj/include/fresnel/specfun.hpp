#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace fresnel {

using cplx = std::complex<double>;

/// Values of the Fresnel integrals C(x) = int_0^x cos(pi t^2/2) dt and S(x) = int_0^x sin(pi t^2/2) dt.
struct FresnelCS {
  double c = 0.0;
  double s = 0.0;
};

namespace detail {

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite argument");
}

// cos and sin of pi*x^2/2 with the argument reduced modulo 4 in x^2 before scaling,
// so large x keep full phase accuracy.
inline void chirp_phase(double x, double& c, double& s) {
  const double hi = x * x;
  const double lo = std::fma(x, x, -hi);
  const double red = std::fmod(hi, 4.0) + lo;
  const double ang = 0.5 * std::numbers::pi * red;
  c = std::cos(ang);
  s = std::sin(ang);
}

// Power series of C + iS = sum_k i^k (pi/2)^k x^(2k+1) / (k! (2k+1)); used for |x| < 2.
inline FresnelCS fresnel_series(double x) {
  using ld = long double;
  const ld z = static_cast<ld>(std::numbers::pi) / 2 * static_cast<ld>(x) * x;
  ld term = 1;  // z^k / k!
  ld c = 0, s = 0;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) term *= z / k;
    const ld t = term / (2 * k + 1);
    switch (k & 3) {
      case 0: c += t; break;
      case 1: s += t; break;
      case 2: c -= t; break;
      default: s -= t; break;
    }
    if (k > 4 && t < 1e-22L) break;
  }
  return {static_cast<double>(c * x), static_cast<double>(s * x)};
}

// Continued fraction for the complementary error function along the Fresnel diagonal; |x| >= 2.
inline FresnelCS fresnel_cfrac(double ax) {
  using lc = std::complex<long double>;
  const long double pix2 = static_cast<long double>(std::numbers::pi) * ax * ax;
  const long double tiny = 1e-300L;
  lc b(1.0L, -pix2);
  lc cc(1.0L / tiny, 0.0L);
  lc d = 1.0L / b;
  lc h = d;
  long double n = -1;
  for (int k = 2; k < 100000; ++k) {
    n += 2;
    const long double a = -n * (n + 1);
    b += 4.0L;
    d = 1.0L / (a * d + b);
    cc = b + a / cc;
    const lc del = cc * d;
    h *= del;
    if (std::abs(del.real() - 1.0L) + std::abs(del.imag()) < 1e-19L) break;
  }
  h *= lc(ax, -ax);
  double cph, sph;
  chirp_phase(ax, cph, sph);
  const lc cs = lc(0.5L, 0.5L) * (1.0L - lc(cph, sph) * h);
  return {static_cast<double>(cs.real()), static_cast<double>(cs.imag())};
}

}  // namespace detail

/// Fresnel integrals C(x), S(x) to about 1e-15 absolute accuracy.
inline FresnelCS fresnel_cs(double x) {
  detail::require_finite(x, "fresnel_cs");
  const double ax = std::fabs(x);
  FresnelCS r = ax < 2.0 ? detail::fresnel_series(ax) : detail::fresnel_cfrac(ax);
  if (x < 0) {
    r.c = -r.c;
    r.s = -r.s;
  }
  return r;
}

/// Propagated edge profile: D(1_{x>=0})(y) = theta_tilde(sqrt(f) * y).
inline cplx theta_tilde(double x) {
  detail::require_finite(x, "theta_tilde");
  const FresnelCS cs = fresnel_cs(-x / std::sqrt(std::numbers::pi));
  return 0.5 - cplx(0.5, -0.5) * cplx(cs.c, cs.s);
}

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error(std::string(what) + " must be positive and finite");
}

/// Propagated interval profile: D(1_{[-D,D]})(y) = iota_tilde(D^2 f, sqrt(f) * y).
inline cplx iota_tilde(double f_delta, double x) {
  require_positive(f_delta, "iota_tilde: f_delta");
  const double a = std::sqrt(f_delta);
  return theta_tilde(x + a) - theta_tilde(x - a);
}

/// Edge-difference profile theta_tilde(x) - theta_tilde(x - sqrt(f_delta)), the propagated 1_{[0,D]} up to reflection.
inline cplx theta_tilde_diff(double f_delta, double x) {
  require_positive(f_delta, "theta_tilde_diff: f_delta");
  return theta_tilde(x) - theta_tilde(x - std::sqrt(f_delta));
}

/// Complementary error function.
inline double gaussian_tail(double t) {
  detail::require_finite(t, "gaussian_tail");
  return std::erfc(t);
}

inline std::vector<cplx> theta_tilde(std::span<const double> xs) {
  std::vector<cplx> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = theta_tilde(xs[i]);
  return out;
}

inline std::vector<cplx> iota_tilde(double f_delta, std::span<const double> xs) {
  std::vector<cplx> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = iota_tilde(f_delta, xs[i]);
  return out;
}

}  // namespace fresnel
