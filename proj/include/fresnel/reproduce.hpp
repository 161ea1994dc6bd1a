#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "fresnel/bounds.hpp"
#include "fresnel/io.hpp"
#include "fresnel/phaseless.hpp"
#include "fresnel/splines.hpp"

namespace fresnel {

/// Computed-versus-stated comparisons of a reproduction run.
struct Manifest {
  KeyValueText entries;
  bool ok = true;

  /// |computed - expected| <= tol.
  void near(const std::string& name, double computed, double expected, double tol) {
    const bool pass = std::fabs(computed - expected) <= tol;
    record(name, computed, expected, "|computed - expected| <= " + format_double(tol), pass);
  }
  /// |computed / expected - 1| <= rel.
  void relative(const std::string& name, double computed, double expected, double rel) {
    const bool pass = std::fabs(computed / expected - 1.0) <= rel;
    record(name, computed, expected, "relative deviation <= " + format_double(rel), pass);
  }
  void at_least(const std::string& name, double computed, double expected) {
    record(name, computed, expected, "computed >= expected", computed >= expected);
  }
  void at_most(const std::string& name, double computed, double expected) {
    record(name, computed, expected, "computed <= expected", computed <= expected);
  }
  void record(const std::string& name, double computed, double expected, const std::string& rule, bool pass) {
    entries.set(name + ".computed", computed);
    entries.set(name + ".expected", expected);
    entries.set(name + ".rule", rule);
    entries.set(name + ".status", pass ? "ok" : "mismatch");
    ok = ok && pass;
  }
};

struct ReproduceOptions {
  std::string out_dir = ".";
  std::string config_hash;
  unsigned threads = 0;
  std::size_t pixels = 201;
  FullFovOptions fullfov;
};

namespace detail {

inline std::string out_path(const ReproduceOptions& o, const std::string& name) {
  return (std::filesystem::path(o.out_dir) / name).string();
}

inline KeyValueText tagged(const ReproduceOptions& o, KeyValueText kv) {
  if (!o.config_hash.empty()) kv.set("config_hash", o.config_hash);
  return kv;
}

/// CSV (x, y, value), PGM and sidecar for one map.
inline void write_map(const ResolutionMap& map, const ReproduceOptions& o, const std::string& stem) {
  const KeyValueText meta = tagged(o, map.metadata());
  std::vector<std::vector<double>> rows;
  rows.reserve(map.values.size());
  double lo = map.values.front(), hi = map.values.front();
  for (std::size_t r = 0; r < map.n; ++r)
    for (std::size_t c = 0; c < map.n; ++c) {
      const double v = map.at(r, c);
      rows.push_back({map.coords[c], map.coords[r], v});
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  write_csv(out_path(o, stem + ".csv"), meta, {"x", "y", "value"}, rows);
  std::vector<std::string> comments;
  for (const auto& [k, v] : meta.entries()) comments.push_back(k + "=" + v);
  comments.push_back("scale_lo=" + format_double(lo));
  comments.push_back("scale_hi=" + format_double(hi));
  write_pgm16(out_path(o, stem + ".pgm"), map.n, map.n, map.values, lo, hi, comments);
  KeyValueText side = meta;
  side.set("scale_lo", lo);
  side.set("scale_hi", hi);
  side.set("csv", stem + ".csv");
  side.set("pgm", stem + ".pgm");
  side.write(out_path(o, stem + ".txt"));
}

/// Value at the pixel nearest to (x, y).
inline double map_value_at(const ResolutionMap& map, double x, double y) {
  auto nearest = [&map](double t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < map.n; ++i)
      if (std::fabs(map.coords[i] - t) < std::fabs(map.coords[best] - t)) best = i;
    return best;
  };
  return map.at(nearest(y), nearest(x));
}

}  // namespace detail

/// C_band curves for k in {0, 1, 3, 5, 7} over nu in [1, 4] (first sample just above 1).
inline Manifest reproduce_fig4(const ReproduceOptions& o) {
  const std::vector<int> ks = {0, 1, 3, 5, 7};
  std::vector<double> nus = {1.0 + 1e-9};
  for (int i = 1; i <= 300; ++i) nus.push_back(1.0 + 0.01 * i);
  std::vector<std::string> cols = {"nu"};
  for (int k : ks) cols.push_back("C_band_k" + std::to_string(k));
  std::vector<std::vector<double>> rows;
  for (double nu : nus) {
    std::vector<double> row = {nu};
    for (int k : ks) row.push_back(c_band(k, nu).C_band);
    rows.push_back(row);
  }
  KeyValueText meta;
  meta.set("figure", "fig4");
  meta.set("scale", "semilog-y");
  write_csv(detail::out_path(o, "fig4_cband.csv"), detail::tagged(o, meta), cols, rows);

  Manifest man;
  for (int k : ks) {
    const std::string p = "fig4.k" + std::to_string(k);
    if (k >= 3) man.near(p + ".just_above_1", c_band(k, 1.0 + 1e-9).C_band, std::numbers::sqrt2 / 2.0, 1e-3);
    man.at_most(p + ".decrease_1.1_to_1.5", c_band(k, 1.5).C_band, c_band(k, 1.1).C_band);
    double lo = 1.0, hi = 0.0;
    for (double nu = 1.5; nu <= 3.0 + 1e-12; nu += 0.01) {
      const double v = c_band(k, nu).C_band;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    man.at_most(p + ".plateau_1.5_3_relative_spread", hi / lo - 1.0, 0.05);
  }
  return man;
}

/// Stability (r = 1/500) and resolution (C = 1/4) maps at f = 1e4 for one variant.
inline Manifest reproduce_maps(const ReproduceOptions& o, MapVariant variant) {
  MapParams p;
  p.variant = variant;
  p.pixels = o.pixels;
  p.threads = o.threads;
  const double r = 1.0 / 500.0;
  const ResolutionMap stab = stability_map(p, r);
  const ResolutionMap res = resolution_map(p, 0.25);
  const std::string tag = variant == MapVariant::complex ? "fig5" : "fig8";
  detail::write_map(stab, o, tag + "_stability");
  detail::write_map(res, o, tag + "_resolution");

  Manifest man;
  const double zero_width = std::numbers::pi / (p.f * r);
  if (variant == MapVariant::complex) {
    man.at_most(tag + ".stability_at_dist_pi_over_fr", detail::map_value_at(stab, 0.5 - zero_width, 0.0), 0.0);
    man.at_least(tag + ".stability_at_dist_1.5_pi_over_fr", detail::map_value_at(stab, 0.5 - 1.5 * zero_width, 0.0),
                 0.9);
    const double centre = detail::map_value_at(res, 0.0, 0.0);
    man.relative(tag + ".resolution_centre_vs_f_over_2pi", centre, p.f / (2.0 * std::numbers::pi), 0.25);
  } else {
    man.at_least(tag + ".stability_edge_midpoint_positive", detail::map_value_at(stab, 0.5, 0.0) > 0.0 ? 1.0 : 0.0,
                 1.0);
    man.at_most(tag + ".stability_corner", detail::map_value_at(stab, 0.5, 0.5), 0.0);
    man.at_least(tag + ".resolution_edge_midpoint_positive", detail::map_value_at(res, 0.5, 0.0) > 0.0 ? 1.0 : 0.0,
                 1.0);
    man.at_most(tag + ".resolution_corner", detail::map_value_at(res, 0.5, 0.5), 0.0);
  }
  return man;
}

/// Full-FoV constants, spline constants and assembled guarantees of the three worked examples.
inline Manifest reproduce_examples(const ReproduceOptions& o) {
  Manifest man;
  std::vector<std::vector<double>> rows;
  std::string table;
  int idx = 0;
  for (const XpciExample& ex : xpci_examples()) {
    ++idx;
    const FullFovConstant c = fullfov_stability_constant(ex.omega, ex.f, ex.alpha, o.fullfov);
    const PhaselessBound ours = phaseless_stability_bound(ex.omega, ex.f, c.value, 1.0 / ex.rinv, ex.k, ex.nu);
    const PhaselessBound stated = phaseless_stability_bound(ex.omega, ex.f, ex.stated_c_ip, 1.0 / ex.rinv, ex.k, ex.nu);
    const double cstab_m = ours.spline.guarantee();
    const std::string p = ex.name;
    man.relative(p + ".c_ip", c.value, ex.stated_c_ip, 0.15);
    man.at_least(p + ".c_ip_monotone_history", c.monotone ? 1.0 : 0.0, 1.0);
    man.near(p + ".c_stab_power_m", cstab_m, ex.stated_c_stab, 1e-3);
    man.at_least(p + ".guarantee_with_stated_c_ip", stated.guarantee, ex.stated_guarantee);
    man.at_least(p + ".guarantee_with_computed_c_ip_positive", ours.guarantee > 0.0 ? 1.0 : 0.0, 1.0);
    rows.push_back({static_cast<double>(idx), ex.stated_guarantee, stated.guarantee, ours.guarantee, ex.stated_c_ip,
                    c.value, ex.stated_c_stab, cstab_m});
    KeyValueText rep = detail::tagged(o, c.report());
    rep.merge(ours.report());
    rep.set("guarantee_with_stated_c_ip", stated.guarantee);
    rep.write(detail::out_path(o, p + ".txt"));
  }
  KeyValueText meta;
  meta.set("table", "worked examples: stated versus computed");
  write_csv(detail::out_path(o, "examples.csv"), detail::tagged(o, meta),
            {"example", "guarantee_stated", "guarantee_with_stated_c_ip", "guarantee_computed", "c_ip_stated",
             "c_ip_computed", "c_stab_m_stated", "c_stab_m_computed"},
            rows);
  return man;
}

}  // namespace fresnel
