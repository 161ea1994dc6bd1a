#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fresnel {

/// y = A x for a real symmetric operator.
using SymmetricOperator = std::function<void(const std::vector<double>& x, std::vector<double>& y)>;

enum class SpectrumEnd { smallest, largest };

struct LanczosOptions {
  double rel_tol = 1e-4;
  int max_iter = 20000;  // operator applications
  int max_basis = 96;    // basis size that triggers a thick restart
  int keep = 32;         // Ritz vectors kept across a restart
  int check_every = 5;
  std::uint64_t seed = 12345;
};

struct LanczosResult {
  double value = 0.0;
  double residual = 0.0;        // Ritz residual norm ||A y - theta y||
  double error_estimate = 0.0;  // eigenvalue error estimate min(r, r^2 / gap)
  int iterations = 0;           // operator applications
  int restarts = 0;
  std::vector<double> ritz_history;
  std::vector<double> residual_history;
};

class LanczosError : public std::runtime_error {
 public:
  LanczosError(const std::string& msg, std::vector<double> residuals)
      : std::runtime_error(msg), residual_history(std::move(residuals)) {}
  std::vector<double> residual_history;
};

/// Extreme eigenvalue of a symmetric operator by thick-restart Lanczos with full reorthogonalisation.
/// The projected matrix Q^T A Q is kept explicitly; on restart the `keep` Ritz vectors nearest the wanted
/// end of the spectrum are retained together with the current residual direction.
/// Converged when the eigenvalue error estimate drops below rel_tol * |Ritz value|.
inline LanczosResult lanczos_extreme(const SymmetricOperator& op, std::size_t n, SpectrumEnd end,
                                     const LanczosOptions& opt = {}) {
  if (n == 0) throw std::invalid_argument("lanczos_extreme: empty operator");
  const int max_basis = static_cast<int>(std::min<std::size_t>(std::max(opt.max_basis, 4), n));
  const int keep = std::clamp(opt.keep, 1, max_basis - 2);

  std::vector<std::vector<double>> basis;
  basis.reserve(max_basis + 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(max_basis + 1, max_basis + 1);

  auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  std::vector<double> q(n);
  for (auto& v : q) v = nd(rng);
  {
    const double s = std::sqrt(dot(q, q));
    for (double& e : q) e /= s;
  }
  basis.push_back(q);

  LanczosResult res;
  std::vector<double> w(n);
  int j = 0;  // index of the next basis vector to expand
  int since_check = 0;
  while (res.iterations < opt.max_iter) {
    op(basis[j], w);
    ++res.iterations;
    ++since_check;
    std::vector<double> coef(j + 1, 0.0);
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        const double c = dot(w, basis[i]);
        for (std::size_t t = 0; t < n; ++t) w[t] -= c * basis[i][t];
        coef[i] += c;
      }
    for (int i = 0; i <= j; ++i) M(i, j) = M(j, i) = coef[i];
    const double bnorm = std::sqrt(dot(w, w));
    const int m = j + 1;
    const bool exhausted = bnorm < 1e-14 * std::max(1.0, std::fabs(M(j, j))) || m == static_cast<int>(n);
    const bool full = m == max_basis;

    if (since_check >= opt.check_every || exhausted || full) {
      since_check = 0;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.topLeftCorner(m, m));
      const int idx = end == SpectrumEnd::smallest ? 0 : m - 1;
      const double theta = es.eigenvalues()(idx);
      const double r = std::fabs(bnorm * es.eigenvectors()(m - 1, idx));
      double err = r;
      if (m > 1) {
        const int nb = end == SpectrumEnd::smallest ? 1 : m - 2;
        const double gap = std::fabs(es.eigenvalues()(nb) - theta);
        if (gap > 0.0) err = std::min(err, r * r / gap);
      }
      res.ritz_history.push_back(theta);
      res.residual_history.push_back(r);
      res.value = theta;
      res.residual = r;
      res.error_estimate = err;
      if (err <= opt.rel_tol * std::fabs(theta) || exhausted) return res;

      if (full) {
        // Thick restart: keep the wanted Ritz vectors plus the residual direction.
        std::vector<int> order(m);
        for (int i = 0; i < m; ++i) order[i] = end == SpectrumEnd::smallest ? i : m - 1 - i;
        std::vector<std::vector<double>> kept(keep, std::vector<double>(n, 0.0));
        for (int l = 0; l < keep; ++l) {
          const int col = order[l];
          for (int i = 0; i < m; ++i) {
            const double y = es.eigenvectors()(i, col);
            for (std::size_t t = 0; t < n; ++t) kept[l][t] += y * basis[i][t];
          }
        }
        for (double& e : w) e /= bnorm;
        basis = std::move(kept);
        basis.reserve(max_basis + 1);
        basis.push_back(w);
        M.setZero();
        // couplings to the residual direction are recomputed when it is expanded
        for (int l = 0; l < keep; ++l) M(l, l) = es.eigenvalues()(order[l]);
        j = keep;
        ++res.restarts;
        continue;
      }
    }
    M(j + 1, j) = bnorm;
    M(j, j + 1) = bnorm;
    for (double& e : w) e /= bnorm;
    basis.push_back(w);
    ++j;
  }
  std::ostringstream os;
  os << "lanczos_extreme: no convergence after " << res.iterations << " operator applications, last residual "
     << res.residual << " for Ritz value " << res.value;
  throw LanczosError(os.str(), res.residual_history);
}

}  // namespace fresnel
