#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fresnel/geometry.hpp"
#include "fresnel/grid.hpp"
#include "fresnel/specfun.hpp"

namespace fresnel {

inline constexpr int kMaxSplineOrder = 15;

inline void require_spline_order(int k) {
  if (k < 0 || k > kMaxSplineOrder)
    throw std::domain_error("B-spline order must lie in [0, " + std::to_string(kMaxSplineOrder) + "]");
}

/// Centred cardinal B-spline B_k on [-(k+1)/2, (k+1)/2] by the Cox-de Boor recursion; B_0 = 1_[-1/2, 1/2).
inline double bspline_eval(int k, double x) {
  require_spline_order(k);
  const double half = 0.5 * (k + 1);
  const double t = x + half;  // knots at 0, 1, ..., k+1
  if (!(t >= 0.0) || t >= k + 1.0) return 0.0;
  const int cell = static_cast<int>(std::floor(t));
  // b[i] holds B_{i,p}(t) for the knot intervals touching `cell`.
  double b[kMaxSplineOrder + 2] = {0.0};
  b[cell] = 1.0;
  for (int p = 1; p <= k; ++p) {
    for (int i = std::max(0, cell - p); i <= cell && i + p + 1 <= k + 1; ++i) {
      const double left = (t - i) / p * b[i];
      const double right = (i + p + 1 - t) / p * b[i + 1];
      b[i] = left + right;
    }
  }
  return b[0];
}

/// Tensor-product value prod_j B_k(x_j).
inline double bspline_eval(int k, const Point& x, int m) {
  double v = 1.0;
  for (int j = 0; j < m && v != 0.0; ++j) v *= bspline_eval(k, x[j]);
  return v;
}

/// Unitary Fourier transform of B_k: (2 pi)^{-1/2} sinc(xi/2)^{k+1}.
inline double bspline_fourier(int k, double xi) {
  const double h = 0.5 * xi;
  const double s = std::fabs(h) < 1e-8 ? 1.0 - h * h / 6.0 : std::sin(h) / h;
  return std::pow(s, k + 1) / std::sqrt(2.0 * std::numbers::pi);
}

/// h(x) = sum_j b_j B_k^m(x/r - j - o), coefficients stored row-major over index box [lo, lo + shape).
struct SplineObject {
  int m = 1;
  int k = 3;
  double r = 0.1;
  Point o{0.0, 0.0, 0.0};
  std::array<long long, 3> lo{0, 0, 0};
  std::array<std::size_t, 3> shape{1, 1, 1};
  std::vector<cplx> coeffs;
  DomainSpec support_box = DomainSpec::unit_box(1);

  std::size_t count() const {
    std::size_t s = 1;
    for (int a = 0; a < m; ++a) s *= shape[a];
    return s;
  }
  std::array<long long, 3> index(std::size_t flat) const {
    std::array<long long, 3> j{0, 0, 0};
    for (int a = m - 1; a >= 0; --a) {
      j[a] = lo[a] + static_cast<long long>(flat % shape[a]);
      flat /= shape[a];
    }
    return j;
  }
  /// Axis-aligned support of basis function j.
  std::pair<Point, Point> basis_support(const std::array<long long, 3>& j) const {
    Point a{0, 0, 0}, b{0, 0, 0};
    for (int ax = 0; ax < m; ++ax) {
      const double c = r * (static_cast<double>(j[ax]) + o[ax]);
      a[ax] = c - 0.5 * r * (k + 1);
      b[ax] = c + 0.5 * r * (k + 1);
    }
    return {a, b};
  }

  void validate() const {
    require_spline_order(k);
    require_positive(r, "SplineObject: r");
    if (m < 1 || m > 3 || support_box.m != m) throw std::domain_error("SplineObject: inconsistent dimension");
    if (coeffs.size() != count()) throw std::invalid_argument("SplineObject: coefficient count does not match shape");
    for (int a = 0; a < m; ++a)
      if (!(o[a] >= 0.0 && o[a] < 1.0)) throw std::domain_error("SplineObject: origin must lie in [0,1)^m");
    const auto [blo, bhi] = support_box.bounding_box();
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (coeffs[i] == cplx(0.0, 0.0)) continue;
      const auto [a, b] = basis_support(index(i));
      for (int ax = 0; ax < m; ++ax)
        if (a[ax] < blo[ax] - 1e-12 || b[ax] > bhi[ax] + 1e-12)
          throw std::domain_error("SplineObject: basis support leaves the support box");
    }
  }

  cplx operator()(const Point& x) const {
    std::array<long long, 3> jlo{0, 0, 0}, jhi{0, 0, 0};
    for (int a = 0; a < m; ++a) {
      const double u = x[a] / r - o[a];
      jlo[a] = std::max(lo[a], static_cast<long long>(std::floor(u - 0.5 * (k + 1))));
      jhi[a] = std::min(lo[a] + static_cast<long long>(shape[a]) - 1, static_cast<long long>(std::ceil(u + 0.5 * (k + 1))));
      if (jlo[a] > jhi[a]) return {0.0, 0.0};
    }
    cplx s(0.0, 0.0);
    std::array<long long, 3> j = jlo;
    while (true) {
      double w = 1.0;
      std::size_t flat = 0;
      for (int a = 0; a < m; ++a) {
        w *= bspline_eval(k, x[a] / r - static_cast<double>(j[a]) - o[a]);
        flat = flat * shape[a] + static_cast<std::size_t>(j[a] - lo[a]);
      }
      if (w != 0.0) s += w * coeffs[flat];
      int a = m - 1;
      while (a >= 0 && ++j[a] > jhi[a]) {
        j[a] = jlo[a];
        --a;
      }
      if (a < 0) break;
    }
    return s;
  }

  double coeff_l2() const {
    double s = 0.0;
    for (const auto& c : coeffs) s += std::norm(c);
    return std::sqrt(s);
  }
};

/// Spline whose coefficient box covers every basis function fully supported inside `omega` (box domains).
inline SplineObject make_spline_on_box(int m, int k, double r, const Point& o, const DomainSpec& omega) {
  if (omega.kind != DomainKind::box && omega.kind != DomainKind::interval)
    throw std::invalid_argument("make_spline_on_box: omega must be a box");
  SplineObject s;
  s.m = m;
  s.k = k;
  s.r = r;
  s.o = o;
  s.support_box = omega;
  const auto [blo, bhi] = omega.bounding_box();
  for (int a = 0; a < m; ++a) {
    const double half = 0.5 * (k + 1);
    const long long jmin = static_cast<long long>(std::ceil(blo[a] / r - o[a] + half - 1e-9));
    const long long jmax = static_cast<long long>(std::floor(bhi[a] / r - o[a] - half + 1e-9));
    if (jmax < jmin) throw std::domain_error("make_spline_on_box: box too small for one basis function");
    s.lo[a] = jmin;
    s.shape[a] = static_cast<std::size_t>(jmax - jmin + 1);
  }
  s.coeffs.assign(s.count(), cplx(0.0, 0.0));
  return s;
}

/// Samples the spline on `grid`; the grid must cover the support box.
inline ComplexField sample_spline(const SplineObject& obj, const Grid& grid) {
  obj.validate();
  if (grid.m != obj.m) throw std::invalid_argument("sample_spline: dimension mismatch");
  const auto [blo, bhi] = obj.support_box.bounding_box();
  for (int a = 0; a < obj.m; ++a)
    if (blo[a] < grid.lower(a) || bhi[a] > grid.upper(a))
      throw std::domain_error("sample_spline: grid does not cover the support box");

  // Per-axis basis tables: value of B_k(x_i/r - j - o) for every grid index i and coefficient j.
  struct Entry {
    std::size_t i;
    std::size_t j;
    double w;
  };
  std::vector<std::vector<Entry>> tab(obj.m);
  for (int a = 0; a < obj.m; ++a) {
    for (std::size_t i = 0; i < grid.n; ++i) {
      const double u = grid.coord(a, i) / obj.r - obj.o[a];
      const long long j0 = std::max(obj.lo[a], static_cast<long long>(std::floor(u - 0.5 * (obj.k + 1))));
      const long long j1 = std::min(obj.lo[a] + static_cast<long long>(obj.shape[a]) - 1,
                                    static_cast<long long>(std::ceil(u + 0.5 * (obj.k + 1))));
      for (long long j = j0; j <= j1; ++j) {
        const double w = bspline_eval(obj.k, u - static_cast<double>(j));
        if (w != 0.0) tab[a].push_back({i, static_cast<std::size_t>(j - obj.lo[a]), w});
      }
    }
  }
  ComplexField out(grid);
  const std::size_t n = grid.n;
  if (obj.m == 1) {
    for (const auto& e : tab[0]) out.samples[e.i] += e.w * obj.coeffs[e.j];
  } else if (obj.m == 2) {
    // Contract axis 1 first: tmp(j0, i1) = sum_j1 b(j0, j1) B(x_i1).
    const std::size_t s0 = obj.shape[0], s1 = obj.shape[1];
    std::vector<cplx> tmp(s0 * n, cplx(0.0, 0.0));
    for (std::size_t j0 = 0; j0 < s0; ++j0)
      for (const auto& e : tab[1]) tmp[j0 * n + e.i] += e.w * obj.coeffs[j0 * s1 + e.j];
    for (const auto& e : tab[0])
      for (std::size_t i1 = 0; i1 < n; ++i1) out.samples[e.i * n + i1] += e.w * tmp[e.j * n + i1];
  } else {
    for (std::size_t idx = 0; idx < out.samples.size(); ++idx) out.samples[idx] = obj(grid.point(idx));
  }
  return out;
}

/// Solves for 1D coefficients b_j (j = lo .. lo+N-1) with sum_j b_j B_k(i - j) = values_i at the nodes i = j.
inline std::vector<cplx> interpolation_coefficients(int k, const std::vector<cplx>& values) {
  require_spline_order(k);
  const int n = static_cast<int>(values.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - k - 1); j <= std::min(n - 1, i + k + 1); ++j) A(i, j) = bspline_eval(k, i - j);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXcd rhs(n);
  for (int i = 0; i < n; ++i) rhs(i) = values[i];
  Eigen::VectorXcd b = lu.solve(rhs);
  return std::vector<cplx>(b.data(), b.data() + n);
}

/// Tensor-product interpolating spline (m = 1 or 2) through node values on r*(j + o), j in [lo, lo + shape).
inline SplineObject interpolate_spline(int m, int k, double r, const Point& o, const std::array<long long, 3>& lo,
                                       const std::array<std::size_t, 3>& shape, const std::vector<cplx>& values) {
  if (m != 1 && m != 2) throw std::invalid_argument("interpolate_spline: m must be 1 or 2");
  SplineObject s;
  s.m = m;
  s.k = k;
  s.r = r;
  s.o = o;
  s.lo = lo;
  s.shape = shape;
  if (values.size() != s.count()) throw std::invalid_argument("interpolate_spline: value count mismatch");
  if (m == 1) {
    s.coeffs = interpolation_coefficients(k, values);
  } else {
    const std::size_t n0 = shape[0], n1 = shape[1];
    std::vector<cplx> rows(values.size());
    for (std::size_t i = 0; i < n0; ++i) {
      std::vector<cplx> row(values.begin() + static_cast<long>(i * n1), values.begin() + static_cast<long>((i + 1) * n1));
      const auto c = interpolation_coefficients(k, row);
      std::copy(c.begin(), c.end(), rows.begin() + static_cast<long>(i * n1));
    }
    s.coeffs.assign(values.size(), cplx(0.0, 0.0));
    for (std::size_t j = 0; j < n1; ++j) {
      std::vector<cplx> col(n0);
      for (std::size_t i = 0; i < n0; ++i) col[i] = rows[i * n1 + j];
      const auto c = interpolation_coefficients(k, col);
      for (std::size_t i = 0; i < n0; ++i) s.coeffs[i * n1 + j] = c[i];
    }
  }
  Point blo{0, 0, 0}, bhi{0, 0, 0};
  for (int a = 0; a < m; ++a) {
    blo[a] = r * (static_cast<double>(lo[a]) + o[a] - 0.5 * (k + 1));
    bhi[a] = r * (static_cast<double>(lo[a] + static_cast<long long>(shape[a]) - 1) + o[a] + 0.5 * (k + 1));
  }
  Point c{0, 0, 0}, h{0, 0, 0};
  for (int a = 0; a < m; ++a) {
    c[a] = 0.5 * (blo[a] + bhi[a]);
    h[a] = 0.5 * (bhi[a] - blo[a]);
  }
  s.support_box = DomainSpec::box(m, c, h);
  return s;
}

/// Structured-text serialisation.
inline std::string to_text(const SplineObject& s) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "spline_object 1\n";
  os << "m = " << s.m << "\nk = " << s.k << "\nr = " << s.r << "\norigin =";
  for (int a = 0; a < s.m; ++a) os << ' ' << s.o[a];
  os << "\nindex_lo =";
  for (int a = 0; a < s.m; ++a) os << ' ' << s.lo[a];
  os << "\nshape =";
  for (int a = 0; a < s.m; ++a) os << ' ' << s.shape[a];
  const auto [blo, bhi] = s.support_box.bounding_box();
  os << "\nsupport_lo =";
  for (int a = 0; a < s.m; ++a) os << ' ' << blo[a];
  os << "\nsupport_hi =";
  for (int a = 0; a < s.m; ++a) os << ' ' << bhi[a];
  os << "\ncoeffs\n";
  for (const auto& c : s.coeffs) os << c.real() << ' ' << c.imag() << '\n';
  return os.str();
}

inline SplineObject spline_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line, key, eq;
  std::getline(is, line);
  if (line.rfind("spline_object", 0) != 0) throw std::runtime_error("spline text: missing header");
  SplineObject s;
  Point blo{0, 0, 0}, bhi{0, 0, 0};
  auto read_vals = [&](std::istringstream& ls, auto& arr) {
    for (int a = 0; a < s.m; ++a)
      if (!(ls >> arr[a])) throw std::runtime_error("spline text: short vector for " + key);
  };
  while (std::getline(is, line)) {
    if (line == "coeffs") break;
    std::istringstream ls(line);
    ls >> key >> eq;
    if (eq != "=") throw std::runtime_error("spline text: malformed line '" + line + "'");
    if (key == "m") ls >> s.m;
    else if (key == "k") ls >> s.k;
    else if (key == "r") ls >> s.r;
    else if (key == "origin") read_vals(ls, s.o);
    else if (key == "index_lo") read_vals(ls, s.lo);
    else if (key == "shape") read_vals(ls, s.shape);
    else if (key == "support_lo") read_vals(ls, blo);
    else if (key == "support_hi") read_vals(ls, bhi);
    else throw std::runtime_error("spline text: unknown key " + key);
  }
  Point c{0, 0, 0}, h{0, 0, 0};
  for (int a = 0; a < s.m; ++a) {
    c[a] = 0.5 * (blo[a] + bhi[a]);
    h[a] = 0.5 * (bhi[a] - blo[a]);
  }
  s.support_box = DomainSpec::box(s.m, c, h);
  s.coeffs.resize(s.count());
  for (auto& v : s.coeffs) {
    double re, im;
    if (!(is >> re >> im)) throw std::runtime_error("spline text: truncated coefficients");
    v = cplx(re, im);
  }
  s.validate();
  return s;
}

inline void write_spline(const SplineObject& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << to_text(s);
}

inline SplineObject read_spline(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return spline_from_text(ss.str());
}

struct BandLimitReport {
  int k = 0;
  double nu = 1.0;
  long long n_start = 0;  // ceil((nu - 1)/2)
  double nu_bar = 1.0;
  double nu_tilde = 0.0;
  double c_band0 = 0.0;
  double tail = 0.0;
  double tail_error_bound = 0.0;
  double c_band = 0.0;
  double C_band = 0.0;
  double C_band_multi = 0.0;
  int m = 1;
};

/// ceil((nu - 1)/2) after rounding nu to 12 decimals.
inline long long band_series_start(double nu) {
  const double nu_r = std::round(nu * 1e12) / 1e12;
  const double t = std::round((nu_r - 1.0) / 2.0 * 1e12) / 1e12;
  return static_cast<long long>(std::ceil(t));
}

namespace detail {

/// sum_{n >= n0} 2/(2n+1)^p with an Euler-Maclaurin tail after a direct block; returns the remainder bound.
inline double odd_power_tail(long long n0, int p, double& err_bound) {
  const long long direct = 10000;
  long double s = 0.0L;
  long long n = n0;
  for (; n < n0 + direct; ++n) {
    const long double term = 2.0L / std::pow(static_cast<long double>(2 * n + 1), p);
    s += term;
    if (term < 1e-40L) {
      err_bound = static_cast<double>(term);
      return static_cast<double>(s);
    }
  }
  // g(x) = 2 (2x+1)^-p; sum_{n>=N} g(n) = int_N^inf g + g(N)/2 - g'(N)/12 + R, |R| <= |g''(N)|/720 (g''' of fixed sign).
  const long double x = 2.0L * n + 1.0L;
  const long double integral = std::pow(x, 1 - p) / (p - 1);
  const long double g = 2.0L * std::pow(x, -p);
  const long double g1 = -4.0L * p * std::pow(x, -p - 1);
  const long double g2 = 8.0L * p * (p + 1) * std::pow(x, -p - 2);
  s += integral + g / 2 - g1 / 12;
  err_bound = static_cast<double>(g2 / 720);
  return static_cast<double>(s);
}

}  // namespace detail

/// Quasi-band-limitation constant C_band(k, nu) and its multivariate extension for dimension m.
inline BandLimitReport c_band(int k, double nu, int m = 1) {
  require_spline_order(k);
  if (!(nu >= 1.0) || !std::isfinite(nu))
    throw std::domain_error("c_band: nu must be >= 1; for nu < 1 no bound of this form holds");
  if (m < 1 || m > 3) throw std::domain_error("c_band: m must be 1, 2 or 3");
  BandLimitReport rep;
  rep.k = k;
  rep.nu = nu;
  rep.m = m;
  const int p = 2 * (k + 1);
  rep.n_start = band_series_start(nu);
  rep.nu_bar = 1.0 + 2.0 * static_cast<double>(rep.n_start);
  rep.nu_tilde = rep.nu_bar - nu - 1.0;
  const double nt = std::max(rep.nu_tilde, 0.0);
  const double a = nt > 0.0 ? std::pow(nt / (nu + 2.0 * rep.nu_tilde), p) + std::pow(nt / nu, p) : 0.0;
  rep.c_band0 = std::max(a - std::pow(rep.nu_bar, -p), 0.0);
  rep.tail = detail::odd_power_tail(rep.n_start, p, rep.tail_error_bound);
  rep.c_band = rep.c_band0 + rep.tail;
  rep.C_band = std::sqrt(rep.c_band / (1.0 + rep.c_band));
  rep.C_band_multi = std::sqrt(1.0 - std::pow(1.0 - rep.C_band * rep.C_band, m));
  return rep;
}

inline double c_band_multi(int k, double nu, int m) { return c_band(k, nu, m).C_band_multi; }

/// Lower Riesz constant estimate: sqrt of the smallest eigenvalue of the 1D Gram matrix B_{2k+1}(i - j) of size n,
/// raised to the power m.
inline double riesz_lower_estimate(int k, int m, int n = 64) {
  if (2 * k + 1 > kMaxSplineOrder) throw std::domain_error("riesz_lower_estimate: order too high");
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = bspline_eval(2 * k + 1, i - j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  return std::pow(std::sqrt(std::max(es.eigenvalues()(0), 0.0)), m);
}

}  // namespace fresnel
