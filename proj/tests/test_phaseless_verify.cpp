#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "fresnel/phaseless.hpp"
#include "fresnel/verify.hpp"
#include "oracles.hpp"

using namespace fresnel;

namespace {

ComplexField real_bump(const Grid& g, double shift) {
  return ComplexField::sample(g, [shift](const Point& x) {
    return cplx(std::exp(-40.0 * ((x[0] - shift) * (x[0] - shift) + x[1] * x[1])) * (1.0 + x[0]), 0.0);
  });
}

/// Smallest singular value of the dense linearised-contrast matrix on `count` consecutive samples of a periodic
/// 1D grid with n points and spacing dx. Real objects: phi -> F^-1[-2 sin(chi + alpha) F phi].
/// Complex objects: (phi, mu) -> F^-1[-2 (sin chi F phi + cos chi F mu)].
double dense_ctf_sigma_min(std::size_t n, double dx, std::size_t count, double f, std::optional<double> alpha) {
  const bool cplx_obj = !alpha.has_value();
  const std::size_t cols = cplx_obj ? 2 * count : count;
  Eigen::MatrixXd A(n, cols);
  const double L = dx * static_cast<double>(n);
  auto apply = [&](std::vector<oracle::cplx> v, bool cosine) {
    auto* p = reinterpret_cast<fftw_complex*>(v.data());
    fftw_plan fw = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bw = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(fw);
    for (std::size_t j = 0; j < n; ++j) {
      const long q = j <= n / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n);
      const double xi = 2.0 * std::numbers::pi * static_cast<double>(q) / L;
      const double chi = xi * xi / (2.0 * f) + (cosine ? 0.0 : alpha.value_or(0.0));
      v[j] *= -2.0 * (cosine ? std::cos(chi) : std::sin(chi)) / static_cast<double>(n);
    }
    fftw_execute(bw);
    fftw_destroy_plan(fw);
    fftw_destroy_plan(bw);
    return v;
  };
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<oracle::cplx> e(n, 0.0);
    e[c % count] = 1.0;
    const auto out = apply(e, c >= count);
    for (std::size_t i = 0; i < n; ++i) A(static_cast<long>(i), static_cast<long>(c)) = out[i].real();
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues().minCoeff();
}

}  // namespace

// ---------------------------------------------------------------- linearised contrast operators

TEST(Ctf, ConstantPhaseIsInvisibleWithoutAbsorption) {
  const Grid g = Grid::cell_centred(2, 64, 2.0);
  const ComplexField c = ComplexField::sample(g, [](const Point&) { return cplx(1.0, 0.0); });
  const ComplexField s = apply_ctf(c, {100.0, 0.0, CtfKind::S_alpha_real_input});
  EXPECT_LE(s.l2_norm(), 1e-12);
}

TEST(Ctf, RealInputOperatorMatchesComplexOperator) {
  const Grid g = Grid::cell_centred(2, 128, 2.0);
  const ComplexField phi = real_bump(g, 0.1);
  for (double alpha : {0.0, std::atan(0.1), 1.0}) {
    const ComplexField s = apply_ctf(phi, {300.0, alpha, CtfKind::S_alpha_real_input});
    ComplexField h = phi;
    for (auto& v : h.samples) v *= cplx(0.0, -1.0) * std::polar(1.0, -alpha);
    const ComplexField t = apply_ctf(h, {300.0, 0.0, CtfKind::T_complex_input});
    EXPECT_LE(relative_l2_error(s, t), 1e-10) << alpha;
  }
  ComplexField bad = phi;
  bad.samples[3] = cplx(0.0, 1.0);
  EXPECT_THROW(apply_ctf(bad, {300.0, 0.0, CtfKind::S_alpha_real_input}), std::invalid_argument);
  EXPECT_THROW(apply_ctf(phi, {300.0, 4.0, CtfKind::S_alpha_real_input}), std::domain_error);
}

TEST(Ctf, LeakageBoundedByTwiceFresnelBound) {
  const Grid g = Grid::cell_centred(1, 4096, 4.0);
  const double f = 1e3, fd = 25.0;
  const double hw = 0.5 - std::sqrt(fd / f);
  const ComplexField h = ComplexField::sample(g, [hw](const Point& x) {
    return std::fabs(x[0]) < hw ? cplx(std::cos(30.0 * x[0]), std::sin(7.0 * x[0])) * (hw * hw - x[0] * x[0]) : 0.0;
  });
  const PhaselessLeakage r = phaseless_leakage_bound(h, DomainSpec::unit_box(1), {FilterKind::simplified, f, fd, 1});
  EXPECT_GT(r.measured_ctf, 0.0);
  EXPECT_LE(r.measured_ctf, r.bound);
  EXPECT_LE(r.measured_ctf, 2.0 * r.measured_fresnel + 1e-12);
}

// ---------------------------------------------------------------- full field-of-view constant

TEST(FullFov, LevelsMatchDenseSingularValues) {
  FullFovOptions opt;
  opt.ladder = {8, 12, 16};
  opt.rel_tol = 1e-12;
  opt.max_grid = 4096;
  const DomainSpec omega = DomainSpec::interval(-0.05, 0.05);
  for (std::optional<double> alpha : {std::optional<double>(0.3), std::optional<double>()}) {
    const FullFovConstant c = fullfov_stability_constant(omega, 2e3, alpha, opt);
    ASSERT_EQ(c.convergence_history.size(), 3u);
    for (const FullFovLevel& l : c.convergence_history) {
      const double dx = 0.1 / l.points_across;
      const double ref = dense_ctf_sigma_min(l.grid, dx, static_cast<std::size_t>(l.points_across), 2e3, alpha);
      EXPECT_NEAR(l.value, ref, 1e-6 * std::max(ref, 1e-3)) << l.points_across;
    }
    EXPECT_DOUBLE_EQ(c.finest, c.convergence_history.back().value);
    if (!c.monotone) EXPECT_DOUBLE_EQ(c.value, c.finest);
  }
}

TEST(FullFov, CacheRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "fresnel-fov-test-cache";
  std::filesystem::remove_all(dir);
  FullFovOptions opt;
  opt.ladder = {8, 12, 16};
  opt.cache_dir = dir.string();
  const DomainSpec omega = DomainSpec::centered_box(2, 0.05);
  const FullFovConstant a = fullfov_stability_constant(omega, 2e3, std::nullopt, opt);
  ASSERT_EQ(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator{}), 1);
  const FullFovConstant b = fullfov_stability_constant(omega, 2e3, std::nullopt, opt);
  EXPECT_DOUBLE_EQ(a.value, b.value);
  EXPECT_EQ(a.monotone, b.monotone);
  ASSERT_EQ(a.convergence_history.size(), b.convergence_history.size());
  for (std::size_t i = 0; i < a.convergence_history.size(); ++i)
    EXPECT_DOUBLE_EQ(a.convergence_history[i].value, b.convergence_history[i].value);
  std::filesystem::remove_all(dir);
}

TEST(FullFov, RejectsBadInput) {
  FullFovOptions opt;
  opt.ladder = {8, 12};
  EXPECT_THROW(fullfov_stability_constant(DomainSpec::centered_box(2, 0.05), 2e3, std::nullopt, opt),
               std::invalid_argument);
  opt.ladder = {8, 12, 16};
  EXPECT_THROW(fullfov_stability_constant(DomainSpec::centered_box(2, 0.05), 2e3, 3.5, opt), std::domain_error);
  EXPECT_THROW(fullfov_stability_constant(DomainSpec::centered_box(2, 0.05), -1.0, std::nullopt, opt),
               std::domain_error);
}

TEST(Guarantee, AssembledFormula) {
  EXPECT_DOUBLE_EQ(xpci_guarantee(0.3, 1.0, 2), 0.3);
  EXPECT_EQ(xpci_guarantee(0.1, 0.9, 2), 0.0);
  EXPECT_NEAR(xpci_guarantee(0.328, 0.999, 2), std::sqrt(0.328 * 0.328 - 4.0 * (1.0 - std::pow(0.999, 4))), 1e-15);
  const PhaselessBound b = phaseless_stability_bound(DomainSpec::centered_box(2, 0.05), 2e3, 0.328, 1.0 / 190.0, 7, 1.2);
  EXPECT_NEAR(b.delta, 0.45, 1e-15);
  EXPECT_GE(b.guarantee, 0.12);
  EXPECT_THROW(phaseless_stability_bound(DomainSpec::centered_box(2, 0.5), 2e3, 0.3, 0.01, 7, 1.2), std::domain_error);
}

// ---------------------------------------------------------------- verification harness

TEST(Verify, ScenarioNamesRoundTrip) {
  for (Scenario s : all_scenarios()) EXPECT_EQ(parse_scenario(to_string(s)), s);
  EXPECT_THROW(parse_scenario("nope"), std::invalid_argument);
}

TEST(Verify, HundredComplexLeakageSeedsPass) {
  std::size_t pass = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CaseReport r = run_scenario({seed, Scenario::leakage_complex, default_params(Scenario::leakage_complex, 1)});
    EXPECT_EQ(r.status, CaseStatus::pass) << r.record().to_text();
    pass += r.status == CaseStatus::pass;
  }
  EXPECT_EQ(pass, 100u);
}

TEST(Verify, EmptySuiteAndExitCodes) {
  const SuiteSummary empty = run_suite(10, {});
  EXPECT_EQ(empty.cases.size(), 0u);
  EXPECT_EQ(empty.exit_code(), 0);
  SuiteSummary s;
  s.cases.resize(2);
  s.cases[1].status = CaseStatus::inconclusive;
  EXPECT_EQ(s.exit_code(), 2);
  s.cases[0].status = CaseStatus::fail;
  EXPECT_EQ(s.exit_code(), 1);
}

TEST(Verify, InflatedStabilityConstantIsCaught) {
  VerifyOptions opt;
  opt.stability_scale = 1.5;
  const SuiteSummary s = run_suite(3, {Scenario::stability_spline}, opt);
  EXPECT_GT(s.count(CaseStatus::fail), 0u);
  EXPECT_EQ(s.exit_code(), 1);
  const SuiteSummary ok = run_suite(3, {Scenario::stability_spline});
  EXPECT_EQ(ok.exit_code(), 0) << ok.table();
}

TEST(Verify, WrapAroundIsInconclusive) {
  ScenarioParams p = default_params(Scenario::wavepacket_contrast, 1);
  p.extent = 1.05;
  p.grid_n = 256;
  const CaseReport r = run_scenario({1, Scenario::wavepacket_contrast, p});
  EXPECT_EQ(r.status, CaseStatus::inconclusive) << r.record().to_text();
}

TEST(Verify, RecordsAndTable) {
  const SuiteSummary s = run_suite(2, {Scenario::leakage_real_interval});
  ASSERT_EQ(s.cases.size(), 2u);
  EXPECT_NE(s.records().find("# case 1"), std::string::npos);
  EXPECT_NE(s.table().find("leakage_real_interval m=1"), std::string::npos);
}

TEST(IllPosed, FullDetectorIsIsometry) {
  const DomainSpec omega = DomainSpec::interval(-0.1, 0.1);
  const DomainSpec all = DomainSpec::interval(-10.0, 10.0);
  const IllposedSpectrum s = illposed_decay_check(omega, all, 200.0, 0.01, 512, 20);
  ASSERT_EQ(s.singular_values.size(), 20u);
  for (double v : s.singular_values) EXPECT_NEAR(v, 1.0, 1e-10);
}

TEST(IllPosed, NestedDetectorsOrderSingularValues) {
  const DomainSpec omega = DomainSpec::interval(-0.3, 0.3);
  const auto small = illposed_decay_check(omega, DomainSpec::interval(-0.5, 0.5), 200.0, 0.005, 1024, 40);
  const auto large = illposed_decay_check(omega, DomainSpec::interval(-0.8, 0.8), 200.0, 0.005, 1024, 40);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_LE(small.singular_values[i], large.singular_values[i] + 1e-12);
  for (std::size_t i = 1; i < 40; ++i) EXPECT_LE(small.singular_values[i], small.singular_values[i - 1]);
  EXPECT_LT(small.singular_values.back() / small.singular_values.front(), 1e-3);
}
