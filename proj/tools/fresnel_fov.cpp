#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fresnel/bounds.hpp"
#include "fresnel/cli.hpp"
#include "fresnel/geometry.hpp"
#include "fresnel/io.hpp"
#include "fresnel/phaseless.hpp"
#include "fresnel/propagation.hpp"
#include "fresnel/reproduce.hpp"
#include "fresnel/splines.hpp"
#include "fresnel/verify.hpp"

namespace {

using namespace fresnel;

constexpr int kUsageExit = 64;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Every option of the main app and the chosen subcommand with its resolved value.
KeyValueText resolved_config(const CLI::App& app, const CLI::App& sub) {
  KeyValueText kv;
  kv.set("command", sub.get_name());
  auto add = [&kv](const CLI::App& a, const std::string& prefix) {
    for (const CLI::Option* opt : a.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config") continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      } else {
        value = opt->get_default_str();
        if (value.empty() && opt->get_type_size() == 0) value = "false";
      }
      kv.set(prefix + name, value);
    }
  };
  add(app, "");
  add(sub, sub.get_name() + ".");
  return kv;
}

/// Writes `<out>/<command>.config.txt` and returns the config hash.
std::string write_config(const std::string& out_dir, const KeyValueText& cfg) {
  std::filesystem::create_directories(out_dir);
  const std::string hash = cfg.hash();
  KeyValueText file = cfg;
  file.set("config_hash", hash);
  file.write((std::filesystem::path(out_dir) / (cfg.get("command") + ".config.txt")).string());
  return hash;
}

std::string out_file(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void print(const KeyValueText& kv) { std::cout << kv.to_text(); }

// ---------------------------------------------------------------- constants

struct ConstantsArgs {
  int k = 7;
  double nu = 1.2;
  std::optional<double> f, f_delta, delta, omega_box, f_r;
  std::optional<std::string> r;
  std::optional<int> m;
  std::string variant = "complex";
  bool sweep = false;
};

int run_constants(const ConstantsArgs& a, const std::string& out, const std::string& hash) {
  const BandLimitReport band = c_band(a.k, a.nu, a.m.value_or(1));
  KeyValueText base;
  base.set("config_hash", hash);
  base.set("k", a.k);
  base.set("nu", a.nu);
  base.set("band.series_start", band.n_start);
  base.set("band.c_band", band.c_band);
  base.set("band.C_band", band.C_band);
  base.set("band.C_band_multi", band.C_band_multi);
  base.set("band.tail_error_bound", band.tail_error_bound);
  if (!a.f) {
    if (a.f_delta || a.delta || a.omega_box || a.r || a.f_r || a.sweep)
      throw UsageError("constants: --f is required for stability constants");
    print(base);
    base.write(out_file(out, "constants.txt"));
    return 0;
  }
  const double f = *a.f;
  const StabilityVariant variant = parse_stability_variant(a.variant);
  const int m = a.m.value_or(a.omega_box ? 2 : 1);

  double f_delta = 0.0;
  const int margins = (a.f_delta ? 1 : 0) + (a.delta ? 1 : 0) + (a.omega_box ? 1 : 0);
  if (margins > 1) throw UsageError("constants: give only one of --f-delta, --delta, --omega-box");
  if (a.f_delta) f_delta = *a.f_delta;
  if (a.delta) f_delta = *a.delta * *a.delta * f;
  if (a.omega_box) {
    const double d = 0.5 - *a.omega_box;
    if (!(d > 0.0)) throw UsageError("constants: --omega-box half-width must be below 1/2");
    f_delta = d * d * f;
  }
  if (margins == 0 && variant != StabilityVariant::real_1d)
    throw UsageError("constants: one of --f-delta, --delta, --omega-box is required");
  if (a.r && a.f_r) throw UsageError("constants: give only one of --r, --f-r");
  if (!a.r && !a.f_r) throw UsageError("constants: one of --r, --f-r is required");
  const double f_r = a.f_r ? *a.f_r : std::pow(parse_length(*a.r), 2) * f;

  auto eval = [&](double nu) {
    return variant == StabilityVariant::complex ? c_stab_complex(f_delta, f_r, a.k, nu, m)
                                                : c_stab_real(f, f_delta, f_r, a.k, nu, m, variant);
  };
  KeyValueText rep = base;
  rep.merge(eval(a.nu).report());
  print(rep);
  rep.write(out_file(out, "constants.txt"));
  if (a.sweep) {
    const NuSweep s = sweep_nu(eval);
    std::vector<std::vector<double>> rows;
    for (const auto& c : s.rows) rows.push_back({c.nu, c.c_band, c.c_low, c.c_tot, c.c_stab, c.guarantee()});
    KeyValueText meta;
    meta.set("config_hash", hash);
    meta.set("best_nu", s.rows[s.best].nu);
    write_csv(out_file(out, "constants_sweep.csv"), meta, {"nu", "C_band", "C_low", "C_tot", "C_stab", "guarantee"},
              rows);
    std::cout << "sweep.best_nu = " << format_double(s.rows[s.best].nu) << '\n';
    std::cout << "sweep.best_c_stab = " << format_double(s.rows[s.best].c_stab) << '\n';
    std::cout << "sweep.best_guarantee = " << format_double(s.rows[s.best].guarantee()) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- map

struct MapArgs {
  double f = 1e4;
  int k = 7;
  double nu = 1.2;
  std::string variant = "complex";
  std::size_t pixels = 201;
  std::optional<double> C;
  std::optional<std::string> r;
};

int run_map(const MapArgs& a, unsigned threads, const std::string& out, const std::string& hash) {
  if (a.C.has_value() == a.r.has_value()) throw UsageError("map: give exactly one of --C, --r");
  MapParams p;
  p.f = a.f;
  p.k = a.k;
  p.nu = a.nu;
  p.pixels = a.pixels;
  p.threads = threads;
  p.variant = parse_map_variant(a.variant);
  const ResolutionMap map = a.r ? stability_map(p, parse_length(*a.r)) : resolution_map(p, *a.C);
  ReproduceOptions o;
  o.out_dir = out;
  o.config_hash = hash;
  const std::string stem = std::string("map_") + to_string(map.kind) + "_" + to_string(p.variant);
  detail::write_map(map, o, stem);
  KeyValueText rep = map.metadata();
  rep.set("config_hash", hash);
  rep.set("centre", detail::map_value_at(map, 0.0, 0.0));
  rep.set("edge_midpoint", detail::map_value_at(map, 0.5, 0.0));
  rep.set("corner", detail::map_value_at(map, 0.5, 0.5));
  rep.set("max", *std::max_element(map.values.begin(), map.values.end()));
  rep.set("files", stem + ".csv," + stem + ".pgm," + stem + ".txt");
  print(rep);
  return 0;
}

// ---------------------------------------------------------------- reproduce

int run_reproduce(const std::string& target, ReproduceOptions o) {
  std::vector<std::pair<std::string, Manifest>> parts;
  const bool all = target == "all";
  if (all || target == "fig4") parts.emplace_back("fig4", reproduce_fig4(o));
  if (all || target == "fig5") parts.emplace_back("fig5", reproduce_maps(o, MapVariant::complex));
  if (all || target == "fig8") parts.emplace_back("fig8", reproduce_maps(o, MapVariant::real));
  if (all || target == "examples") parts.emplace_back("examples", reproduce_examples(o));
  bool ok = true;
  for (const auto& [name, man] : parts) {
    KeyValueText kv = man.entries;
    kv.set("config_hash", o.config_hash);
    kv.set("manifest_status", man.ok ? "ok" : "mismatch");
    kv.write(out_file(o.out_dir, name + "_manifest.txt"));
    std::cout << "# " << name << '\n' << kv.to_text();
    ok = ok && man.ok;
  }
  if (target == "examples" || all) {
    std::cout << "\nexample   guarantee(stated)  guarantee(stated C_IP)  C_IP(stated)  C_IP(computed)  C_stab^m(stated)  "
                 "C_stab^m(computed)\n";
    std::ifstream csv(out_file(o.out_dir, "examples.csv"));
    std::string line;
    while (std::getline(csv, line))
      if (!line.empty() && line[0] != '#' && line[0] != 'e') std::cout << line << '\n';
  }
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- verify

int run_verify(bool all, const std::vector<std::string>& names, std::size_t seeds, std::uint64_t first_seed,
               unsigned threads, const std::string& out, const std::string& hash) {
  if (!all && names.empty()) throw UsageError("verify: give --all or at least one --scenario");
  std::vector<Scenario> list;
  if (all) list = all_scenarios();
  for (const auto& n : names) list.push_back(parse_scenario(n));
  const SuiteSummary sum = run_suite(seeds, list, {}, resolve_threads(threads), first_seed);
  std::ofstream rec(out_file(out, "verify_records.txt"));
  rec << "# config_hash = " << hash << '\n' << sum.records();
  std::cout << sum.table();
  for (const auto& c : sum.cases)
    if (c.scenario == Scenario::sym_opnorm)
      std::cout << "sym_opnorm = " << format_double(c.measured) << " (reference " << format_double(c.bound) << ")\n";
  for (const auto& c : sum.cases)
    if (c.status != CaseStatus::pass)
      std::cout << to_string(c.status) << ": " << to_string(c.scenario) << " m=" << c.m << " seed=" << c.seed << ' '
                << c.message << '\n';
  return sum.exit_code();
}

// ---------------------------------------------------------------- propagate

struct PropagateArgs {
  std::optional<double> gaussian;
  std::optional<std::string> input;
  double f = 1e3;
  int m = 1;
  std::size_t n = 2048;
  double extent = 4.0;
  std::string output = "propagated";
};

int run_propagate(const PropagateArgs& a, const std::string& out, const std::string& hash) {
  if (a.gaussian.has_value() == a.input.has_value()) throw UsageError("propagate: give exactly one of --gaussian, --input");
  const FresnelParams params(a.f, a.m);
  KeyValueText rep;
  rep.set("config_hash", hash);
  ComplexField field;
  if (a.gaussian) {
    const double sigma = *a.gaussian;
    const Grid g(a.m, a.n, a.extent);
    field = ComplexField::sample(g, [&](const Point& x) { return cplx(gaussian_density(x, sigma, a.m), 0.0); });
  } else {
    std::ifstream probe(*a.input, std::ios::binary);
    if (!probe) throw UsageError("propagate: cannot open " + *a.input);
    char magic[4] = {};
    probe.read(magic, 4);
    if (std::string(magic, 4) == "FRFD") {
      field = read_field_binary(*a.input);
    } else {
      const SplineObject s = read_spline(*a.input);
      field = sample_spline(s, Grid(s.m, a.n, a.extent));
    }
  }
  const ComplexField prop = propagate_fft(field, FresnelParams(a.f, field.grid.m));
  rep.set("m", field.grid.m);
  rep.set("grid", field.grid.n);
  rep.set("extent", field.grid.extent);
  rep.set("f", a.f);
  rep.set("norm_in", field.l2_norm());
  rep.set("norm_out", prop.l2_norm());
  if (a.gaussian) {
    const GaussianBeam beam = propagate_gaussian(*a.gaussian, params);
    const ComplexField exact = ComplexField::sample(prop.grid, beam);
    rep.set("sigma", *a.gaussian);
    rep.set("sigma_prop", beam.sigma_prop);
    rep.set("relative_l2_error_vs_analytic", relative_l2_error(prop, exact));
  }
  write_field_binary(prop, out_file(out, a.output + ".field"));
  write_field_slice_csv(prop, out_file(out, a.output + "_slice.csv"), 0, {"config_hash=" + hash});
  rep.write(out_file(out, a.output + ".txt"));
  print(rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fresnel propagation with a finite field of view: constants, maps, reproduction and verification"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Read options from a key = value file; command-line flags take precedence");

  std::string out = "fresnel-out";
  unsigned threads = 0;
  app.add_option("--out", out, "Output directory");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  ConstantsArgs ca;
  CLI::App* constants = app.add_subcommand("constants", "Quasi-band-limitation and stability constants");
  constants->add_option("--k", ca.k, "Spline order")->required();
  constants->add_option("--nu", ca.nu, "Band factor nu >= 1")->required();
  constants->add_option("--f", ca.f, "Fresnel number f");
  constants->add_option("--f-delta", ca.f_delta, "Margin Fresnel number Delta^2 f");
  constants->add_option("--delta", ca.delta, "Margin Delta between object domain and detector boundary");
  constants->add_option("--omega-box", ca.omega_box, "Half-width of a centred square object domain in the unit detector");
  constants->add_option("--r", ca.r, "Spline spacing, as a length (0.002) or inverse (500inv)");
  constants->add_option("--f-r", ca.f_r, "Resolution Fresnel number r^2 f");
  constants->add_option("--m", ca.m, "Dimension (default 2 with --omega-box, else 1)")->check(CLI::Range(1, 3));
  constants->add_option("--variant", ca.variant, "complex, real_1d or real_m")
      ->check(CLI::IsMember({"complex", "real_1d", "real_m"}));
  constants->add_flag("--sweep-nu", ca.sweep, "Also tabulate the constants over nu = 1.05 .. 2.00");

  MapArgs ma;
  CLI::App* map = app.add_subcommand("map", "Local stability or resolution map over the unit square detector");
  map->add_option("--f", ma.f, "Fresnel number f");
  map->add_option("--C", ma.C, "Contrast threshold in (0, 1): resolution map");
  map->add_option("--r", ma.r, "Spline spacing (0.002 or 500inv): stability map");
  map->add_option("--k", ma.k, "Spline order");
  map->add_option("--nu", ma.nu, "Band factor");
  map->add_option("--variant", ma.variant, "complex or real")->check(CLI::IsMember({"complex", "real"}));
  map->add_option("--pixels", ma.pixels, "Pixels per axis")->check(CLI::PositiveNumber);

  std::string target;
  ReproduceOptions ro;
  bool no_cache = false;
  std::string cache_dir = default_cache_dir();
  CLI::App* reproduce = app.add_subcommand("reproduce", "Regenerate figure data and worked examples with a manifest");
  reproduce->add_option("target", target, "fig4, fig5, fig8, examples or all")
      ->required()
      ->check(CLI::IsMember({"fig4", "fig5", "fig8", "examples", "all"}));
  reproduce->add_option("--pixels", ro.pixels, "Map pixels per axis")->check(CLI::PositiveNumber);
  reproduce->add_flag("--no-cache", no_cache, "Recompute full field-of-view constants");
  reproduce->add_option("--cache-dir", cache_dir, "Cache directory for full field-of-view constants");

  bool verify_all = false;
  std::vector<std::string> scenarios;
  std::size_t seeds = 10;
  std::uint64_t first_seed = 0;
  CLI::App* verify = app.add_subcommand("verify", "Randomised property suite against discretised propagation");
  verify->add_flag("--all", verify_all, "Run every scenario");
  verify->add_option("--scenario", scenarios, "Scenario name (repeatable)");
  verify->add_option("--seeds", seeds, "Seeds per scenario and dimension");
  verify->add_option("--seed", first_seed, "First seed");

  PropagateArgs pa;
  CLI::App* propagate = app.add_subcommand("propagate", "Propagate a field or an analytic Gaussian by FFT");
  propagate->add_option("--gaussian", pa.gaussian, "Width sigma of a normalised Gaussian object");
  propagate->add_option("--input", pa.input, "Field snapshot or spline file");
  propagate->add_option("--f", pa.f, "Fresnel number");
  propagate->add_option("--m", pa.m, "Dimension for --gaussian")->check(CLI::Range(1, 3));
  propagate->add_option("--n", pa.n, "Grid points per axis")->check(CLI::PositiveNumber);
  propagate->add_option("--extent", pa.extent, "Grid side length")->check(CLI::PositiveNumber);
  propagate->add_option("--output", pa.output, "Output file stem");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string hash = write_config(out, resolved_config(app, *sub));
    if (sub == constants) return run_constants(ca, out, hash);
    if (sub == map) return run_map(ma, threads, out, hash);
    if (sub == reproduce) {
      ro.out_dir = out;
      ro.config_hash = hash;
      ro.threads = threads;
      ro.fullfov.cache_dir = no_cache ? std::string() : cache_dir;
      return run_reproduce(target, ro);
    }
    if (sub == verify) return run_verify(verify_all, scenarios, seeds, first_seed, threads, out, hash);
    if (sub == propagate) return run_propagate(pa, out, hash);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsageExit;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
