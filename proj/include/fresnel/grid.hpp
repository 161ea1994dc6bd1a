#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fresnel {

using cplx = std::complex<double>;
using Point = std::array<double, 3>;

/// Modified Fresnel number f and dimension m.
struct FresnelParams {
  double f = 1.0;
  int m = 1;

  FresnelParams() = default;
  FresnelParams(double f_, int m_) : f(f_), m(m_) { validate(); }

  void validate() const {
    if (!(f > 0.0) || !std::isfinite(f)) throw std::domain_error("FresnelParams: f must be positive");
    if (m < 1 || m > 3) throw std::domain_error("FresnelParams: m must be 1, 2 or 3");
  }
  /// Classical Fresnel number f / (2 pi).
  double classical() const { return f / (2.0 * std::numbers::pi); }
  /// Fresnel number belonging to the lateral length scale sigma: sigma^2 f.
  double scaled(double sigma) const { return sigma * sigma * f; }
};

/// Uniform periodic grid with n points per axis over a cube of side `extent`.
/// Sample j on an axis sits at origin_offset + (j - n/2) * spacing.
struct Grid {
  int m = 1;
  std::size_t n = 0;
  double extent = 1.0;
  Point origin_offset{0.0, 0.0, 0.0};

  Grid() = default;
  Grid(int m_, std::size_t n_, double extent_, Point offset = {0.0, 0.0, 0.0})
      : m(m_), n(n_), extent(extent_), origin_offset(offset) {
    if (m < 1 || m > 3) throw std::domain_error("Grid: m must be 1, 2 or 3");
    if (n < 2) throw std::domain_error("Grid: need at least two points per axis");
    if (!(extent > 0.0)) throw std::domain_error("Grid: extent must be positive");
  }

  /// Grid whose cells are centred half a spacing off the origin, so cell faces land on multiples of the spacing.
  static Grid cell_centred(int m, std::size_t n, double extent) {
    const double h = 0.5 * extent / static_cast<double>(n);
    return Grid(m, n, extent, {h, h, h});
  }

  double spacing() const { return extent / static_cast<double>(n); }
  double xi_max() const { return std::numbers::pi * static_cast<double>(n) / extent; }
  double cell_volume() const { return std::pow(spacing(), m); }
  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < m; ++a) s *= n;
    return s;
  }
  double coord(int axis, std::size_t j) const {
    return origin_offset[axis] + (static_cast<double>(j) - static_cast<double>(n / 2)) * spacing();
  }
  /// Angular frequency of FFT bin j.
  double freq(std::size_t j) const {
    const long long k = j < (n + 1) / 2 ? static_cast<long long>(j) : static_cast<long long>(j) - static_cast<long long>(n);
    return 2.0 * std::numbers::pi * static_cast<double>(k) / extent;
  }
  std::array<std::size_t, 3> unflatten(std::size_t idx) const {
    std::array<std::size_t, 3> ij{0, 0, 0};
    for (int a = m - 1; a >= 0; --a) {
      ij[a] = idx % n;
      idx /= n;
    }
    return ij;
  }
  Point point(std::size_t idx) const {
    const auto ij = unflatten(idx);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < m; ++a) x[a] = coord(a, ij[a]);
    return x;
  }
  Point frequency(std::size_t idx) const {
    const auto ij = unflatten(idx);
    Point xi{0.0, 0.0, 0.0};
    for (int a = 0; a < m; ++a) xi[a] = freq(ij[a]);
    return xi;
  }
  double lower(int axis) const { return coord(axis, 0) - 0.5 * spacing(); }
  double upper(int axis) const { return lower(axis) + extent; }
};

/// Sampled complex wave field.
struct ComplexField {
  Grid grid;
  std::vector<cplx> samples;

  ComplexField() = default;
  explicit ComplexField(const Grid& g) : grid(g), samples(g.size(), cplx(0.0, 0.0)) {}
  ComplexField(const Grid& g, std::vector<cplx> s) : grid(g), samples(std::move(s)) {
    if (samples.size() != grid.size()) throw std::invalid_argument("ComplexField: sample count does not match grid");
  }

  template <class F>
  static ComplexField sample(const Grid& g, F&& fn) {
    ComplexField out(g);
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = fn(g.point(i));
    return out;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& v : samples) s += std::norm(v);
    return s * grid.cell_volume();
  }
  double l2_norm() const { return std::sqrt(squared_norm()); }
};

inline double relative_l2_error(const ComplexField& a, const ComplexField& b) {
  if (a.samples.size() != b.samples.size()) throw std::invalid_argument("relative_l2_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    num += std::norm(a.samples[i] - b.samples[i]);
    den += std::norm(b.samples[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Binary snapshot: "FRFD" magic, int32 m, uint64 n, float64 extent, then n^m little-endian complex64 pairs.
inline void write_field_binary(const ComplexField& fld, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  const char magic[4] = {'F', 'R', 'F', 'D'};
  os.write(magic, 4);
  const std::int32_t m = fld.grid.m;
  const std::uint64_t n = fld.grid.n;
  const double ext = fld.grid.extent;
  os.write(reinterpret_cast<const char*>(&m), sizeof m);
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(&ext), sizeof ext);
  for (const auto& v : fld.samples) {
    const float re = static_cast<float>(v.real()), im = static_cast<float>(v.imag());
    os.write(reinterpret_cast<const char*>(&re), sizeof re);
    os.write(reinterpret_cast<const char*>(&im), sizeof im);
  }
}

inline ComplexField read_field_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::string(magic, 4) != "FRFD") throw std::runtime_error(path + ": not a field snapshot");
  std::int32_t m;
  std::uint64_t n;
  double ext;
  is.read(reinterpret_cast<char*>(&m), sizeof m);
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  is.read(reinterpret_cast<char*>(&ext), sizeof ext);
  Grid g(m, n, ext);
  ComplexField fld(g);
  for (auto& v : fld.samples) {
    float re, im;
    is.read(reinterpret_cast<char*>(&re), sizeof re);
    is.read(reinterpret_cast<char*>(&im), sizeof im);
    v = cplx(re, im);
  }
  if (!is) throw std::runtime_error(path + ": truncated snapshot");
  return fld;
}

/// CSV of a 1D slice through the grid centre along `axis`: x,re,im,abs.
inline void write_field_slice_csv(const ComplexField& fld, const std::string& path, int axis = 0,
                                  const std::vector<std::string>& header = {}) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  for (const auto& h : header) os << "# " << h << '\n';
  os << "x,re,im,abs\n";
  os.precision(17);
  const Grid& g = fld.grid;
  std::size_t stride = 1;
  for (int a = g.m - 1; a > axis; --a) stride *= g.n;
  std::size_t base = 0;
  for (int a = 0; a < g.m; ++a) {
    if (a == axis) continue;
    std::size_t s = 1;
    for (int b = g.m - 1; b > a; --b) s *= g.n;
    base += (g.n / 2) * s;
  }
  for (std::size_t j = 0; j < g.n; ++j) {
    const cplx v = fld.samples[base + j * stride];
    os << g.coord(axis, j) << ',' << v.real() << ',' << v.imag() << ',' << std::abs(v) << '\n';
  }
}

}  // namespace fresnel
