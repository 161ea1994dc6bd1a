#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "fresnel/grid.hpp"

namespace fresnel {

/// In-place multidimensional FFTs over a Grid layout. Plans are created once per shape
/// with FFTW_ESTIMATE (deterministic) and shared across threads; execution is reentrant.
class Fft {
 public:
  static void forward(std::vector<cplx>& data, const Grid& g) { run(data, g, FFTW_FORWARD); }

  /// Inverse transform including the 1/N normalisation.
  static void inverse(std::vector<cplx>& data, const Grid& g) {
    run(data, g, FFTW_BACKWARD);
    const double s = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= s;
  }

 private:
  static fftw_plan plan_for(int m, std::size_t n, int sign) {
    static std::mutex mu;
    static std::map<std::tuple<int, std::size_t, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mu);
    const auto key = std::make_tuple(m, n, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    int dims[3] = {static_cast<int>(n), static_cast<int>(n), static_cast<int>(n)};
    std::size_t total = 1;
    for (int a = 0; a < m; ++a) total *= n;
    std::vector<cplx> scratch(total);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft(m, dims, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("FFTW plan creation failed");
    cache.emplace(key, plan);
    return plan;
  }

  static void run(std::vector<cplx>& data, const Grid& g, int sign) {
    if (data.size() != g.size()) throw std::invalid_argument("Fft: data size does not match grid");
    fftw_plan plan = plan_for(g.m, g.n, sign);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
  }
};

/// Multiplies the spectrum of `data` by a separable symbol prod_a axis_symbol[a][j_a].
inline void apply_separable_multiplier(std::vector<cplx>& data, const Grid& g,
                                       const std::vector<std::vector<cplx>>& axis_symbol) {
  Fft::forward(data, g);
  const std::size_t n = g.n;
  if (g.m == 1) {
    for (std::size_t i = 0; i < n; ++i) data[i] *= axis_symbol[0][i];
  } else if (g.m == 2) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) data[i * n + j] *= axis_symbol[0][i] * axis_symbol[1][j];
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const cplx ij = axis_symbol[0][i] * axis_symbol[1][j];
        for (std::size_t k = 0; k < n; ++k) data[(i * n + j) * n + k] *= ij * axis_symbol[2][k];
      }
  }
  Fft::inverse(data, g);
}

/// Multiplies the spectrum by a general symbol evaluated at the angular frequency vector.
template <class Symbol>
void apply_multiplier(std::vector<cplx>& data, const Grid& g, Symbol&& symbol) {
  Fft::forward(data, g);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= symbol(g.frequency(i));
  Fft::inverse(data, g);
}

}  // namespace fresnel
