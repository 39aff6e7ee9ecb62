#pragma once

// Run configuration: strict JSON parsing (unknown keys rejected), defaults,
// and a lossless round trip through to_json / parse_config.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsfar/errors.hpp"
#include "nsfar/expansion.hpp"
#include "nsfar/initial_data.hpp"
#include "nsfar/solver.hpp"
#include "nsfar/verify.hpp"

namespace nsfar {

using json = nlohmann::ordered_json;

/// Thresholds of the acceptance checks that are not part of a suite.
struct AcceptanceOptions {
  int kernel_points = 50;
  std::uint64_t seed = 20240611;
  double kernel_tol = 1e-7;
  double kernel_mass_floor = 1e-6; // relative errors floored at this fraction of the integrand mass
  double trace_tol = 1e-9;
  double mean_tol = 1e-13;
  double divergence_tol = 1e-10;
  double heat_tol = 1e-8;
  double flux_tol = 1e-8;
  double curl_tol = 1e-8;
  double family_tol = 0.3;   // two-sided band of the per-mu exponents
  double drift_tol = 0.1;    // relative drift of t^{5/2} |K_3|_inf / log t
  double drift_t_max = 1e6;
  int drift_points = 25;     // per decade
  double j_time = 1.0;
  double j_stability_tol = 1e-4;
  int max_inconclusive = 1;
  GridSpec check_grid{128, 16.0, 2.0 / 3.0}; // scaling, curl and J checks
  double check_time = 1.0;
  std::vector<double> scaling_lambdas{0.5, 2.0};
};

/// Solver defaults sized for the default 24-wide box.
inline SolverConfig default_solver() {
  SolverConfig s;
  s.t_max = 9.0;
  s.dt_initial = 0.002;
  s.boundary_floor = 1e-8;
  return s;
}

struct RunConfig {
  std::string output_dir = "out";
  int threads = 1;
  GridSpec grid{256, 24.0, 2.0 / 3.0};
  InitialDataSpec initial;
  SolverConfig solver = default_solver();
  int snapshot_count = 9;
  double snapshot_first_fraction = 1.0 / 16.0;
  ExpansionOptions expansion;
  bool write_term_fields = true;
  int csv_stride = 8;
  VerifyOptions verify;
  std::vector<Variant> variants{Variant::prop_lowt, Variant::prop_lows, Variant::thm_st, Variant::thm_t};
  int lemma_count = 9;
  AcceptanceOptions acceptance;

  /// Solver config with the grid and snapshot schedule filled in.
  SolverConfig solver_config() const {
    SolverConfig s = solver;
    s.grid = grid;
    s.snapshot_times = geometric_times(s.t_max, snapshot_first_fraction, snapshot_count);
    return s;
  }
};

/// Tolerances fixed in the library rather than the config, recorded in meta.
inline json fixed_tolerances() {
  json j;
  j["rate_fit_min_points"] = 6;
  j["rate_fit_min_span"] = 4.0;
  j["node_time_match_relative"] = 1e-9;
  j["snapshot_time_match_relative"] = 1e-9;
  j["scaling_deviation_denominator_floor"] = 0.0;
  j["unit_kernel_grid"] = {{"n", 128}, {"L", 8.0}};
  return j;
}

namespace config_detail {

inline std::string to_string(Stepper s) { return s == Stepper::etdrk4 ? "etdrk4" : "imex_integrating_factor"; }

inline std::string to_string(TimeRule r) {
  switch (r) {
    case TimeRule::cubic: return "cubic";
    case TimeRule::simpson: return "simpson";
    case TimeRule::trapezoid: return "trapezoid";
  }
  return "";
}

inline std::string to_string(InitialShape s) {
  switch (s) {
    case InitialShape::laplacian_gaussian: return "laplacian_gaussian";
    case InitialShape::curl_of_compact_bump: return "curl_of_compact_bump";
    case InitialShape::custom_samples: return "custom_samples";
  }
  return "";
}

/// Reads members of one JSON object and rejects whatever was not read.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  ~Reader() = default;

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where() + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) const { return j_.at(key); }
  std::string child(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key " + where() + "." + k);
  }

private:
  std::string where() const { return path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E parse_enum(const std::string& s, std::initializer_list<E> values, const std::string& what) {
  for (E v : values)
    if (to_string(v) == s) return v;
  throw ConfigError("unknown " + what + " '" + s + "'");
}

inline json grid_json(const GridSpec& g) { return {{"n", g.n}, {"L", g.L}, {"dealias_fraction", g.dealias_fraction}}; }

inline GridSpec read_grid(const json& j, const std::string& path, GridSpec g) {
  Reader r(j, path);
  r.get("n", g.n);
  r.get("L", g.L);
  r.get("dealias_fraction", g.dealias_fraction);
  r.finish();
  return g;
}

} // namespace config_detail

inline json to_json(const RunConfig& c) {
  using namespace config_detail;
  json j;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  j["grid"] = grid_json(c.grid);

  json mod = json::array();
  for (const auto& t : c.initial.modulation.terms) mod.push_back({t.alpha.a1, t.alpha.a2, t.coef});
  j["initial_data"] = {{"shape", to_string(c.initial.shape)},
                       {"amplitude", c.initial.amplitude},
                       {"width", c.initial.width},
                       {"modulation", mod},
                       {"hessian", {c.initial.hessian.h20, c.initial.hessian.h11, c.initial.hessian.h02}},
                       {"moment_tolerance", c.initial.moment_tolerance}};

  const auto& s = c.solver;
  j["solver"] = {{"dt", s.dt},
                 {"dt_initial", s.dt_initial},
                 {"dt_growth", s.dt_growth},
                 {"t_max", s.t_max},
                 {"stepper", to_string(s.stepper)},
                 {"cfl_limit", s.cfl_limit},
                 {"boundary_floor", s.boundary_floor},
                 {"enforce_window", s.enforce_window},
                 {"nonlinear", s.nonlinear},
                 {"snapshot_count", c.snapshot_count},
                 {"snapshot_first_fraction", c.snapshot_first_fraction}};

  const auto& e = c.expansion;
  j["expansion"] = {{"profile_grid", grid_json(e.profile_grid)},
                    {"fixed_point_iterations", e.fixed_point_iterations},
                    {"tail_warning", e.tail_warning},
                    {"time_rule", to_string(e.rule)},
                    {"j_eps_ratio", e.j_eps_ratio},
                    {"j_levels", e.j_levels},
                    {"j_nodes", e.j_nodes},
                    {"j_mode_cutoff", e.j_mode_cutoff},
                    {"write_term_fields", c.write_term_fields},
                    {"csv_stride", c.csv_stride}};

  const auto& v = c.verify;
  json variants = json::array();
  for (auto x : c.variants) variants.push_back(to_string(x));
  j["verify"] = {{"variants", variants},
                 {"window_fraction", v.window_fraction},
                 {"region_fraction", v.region_fraction},
                 {"tol_exponent", v.tol_exponent},
                 {"tol_low_order", v.tol_low_order},
                 {"tol_slope", v.tol_slope},
                 {"tol_decay", v.tol_decay},
                 {"noise_factor", v.noise_factor},
                 {"scaling_tol_exact", v.scaling_tol_exact},
                 {"scaling_tol_quadrature", v.scaling_tol_quadrature},
                 {"free_space_order", v.free_space_order},
                 {"free_space_tau", v.free_space_tau},
                 {"mus_inf", v.mus_inf},
                 {"mus_l1", v.mus_l1},
                 {"lemma_mus", v.lemma_mus},
                 {"weight_k", v.weight_k},
                 {"lemma_count", c.lemma_count}};

  const auto& a = c.acceptance;
  j["acceptance"] = {{"kernel_points", a.kernel_points},
                     {"seed", a.seed},
                     {"kernel_tol", a.kernel_tol},
                     {"kernel_mass_floor", a.kernel_mass_floor},
                     {"trace_tol", a.trace_tol},
                     {"mean_tol", a.mean_tol},
                     {"divergence_tol", a.divergence_tol},
                     {"heat_tol", a.heat_tol},
                     {"flux_tol", a.flux_tol},
                     {"curl_tol", a.curl_tol},
                     {"family_tol", a.family_tol},
                     {"drift_tol", a.drift_tol},
                     {"drift_t_max", a.drift_t_max},
                     {"drift_points", a.drift_points},
                     {"j_time", a.j_time},
                     {"j_stability_tol", a.j_stability_tol},
                     {"max_inconclusive", a.max_inconclusive},
                     {"check_grid", grid_json(a.check_grid)},
                     {"check_time", a.check_time},
                     {"scaling_lambdas", a.scaling_lambdas}};
  return j;
}

inline RunConfig parse_config(const json& j) {
  using namespace config_detail;
  RunConfig c;
  Reader root(j, "config");
  root.get("output_dir", c.output_dir);
  root.get("threads", c.threads);
  if (root.has("grid")) c.grid = read_grid(root.at("grid"), root.child("grid"), c.grid);

  if (root.has("initial_data")) {
    Reader r(root.at("initial_data"), root.child("initial_data"));
    std::string shape = to_string(c.initial.shape);
    r.get("shape", shape);
    c.initial.shape = parse_enum(shape, {InitialShape::laplacian_gaussian, InitialShape::curl_of_compact_bump},
                                 "initial shape");
    r.get("amplitude", c.initial.amplitude);
    r.get("width", c.initial.width);
    r.get("moment_tolerance", c.initial.moment_tolerance);
    if (r.has("modulation")) {
      c.initial.modulation.terms.clear();
      for (const auto& t : r.at("modulation")) {
        if (!t.is_array() || t.size() != 3) throw ConfigError("modulation terms are [a1, a2, coef]");
        const int a1 = t[0].get<int>(), a2 = t[1].get<int>();
        if (a1 < 0 || a2 < 0) throw ConfigError("modulation exponents must be non-negative");
        c.initial.modulation.terms.push_back({{a1, a2}, t[2].get<double>()});
      }
    }
    if (r.has("hessian")) {
      const auto& h = r.at("hessian");
      if (!h.is_array() || h.size() != 3) throw ConfigError("hessian weights are [h20, h11, h02]");
      c.initial.hessian = {h[0].get<double>(), h[1].get<double>(), h[2].get<double>()};
    }
    r.finish();
  }

  if (root.has("solver")) {
    Reader r(root.at("solver"), root.child("solver"));
    auto& s = c.solver;
    r.get("dt", s.dt);
    r.get("dt_initial", s.dt_initial);
    r.get("dt_growth", s.dt_growth);
    r.get("t_max", s.t_max);
    std::string st = to_string(s.stepper);
    r.get("stepper", st);
    s.stepper = parse_enum(st, {Stepper::etdrk4, Stepper::imex_integrating_factor}, "stepper");
    r.get("cfl_limit", s.cfl_limit);
    r.get("boundary_floor", s.boundary_floor);
    r.get("enforce_window", s.enforce_window);
    r.get("nonlinear", s.nonlinear);
    r.get("snapshot_count", c.snapshot_count);
    r.get("snapshot_first_fraction", c.snapshot_first_fraction);
    r.finish();
  }

  if (root.has("expansion")) {
    Reader r(root.at("expansion"), root.child("expansion"));
    auto& e = c.expansion;
    if (r.has("profile_grid")) e.profile_grid = read_grid(r.at("profile_grid"), r.child("profile_grid"), e.profile_grid);
    r.get("fixed_point_iterations", e.fixed_point_iterations);
    r.get("tail_warning", e.tail_warning);
    std::string rule = to_string(e.rule);
    r.get("time_rule", rule);
    e.rule = parse_enum(rule, {TimeRule::cubic, TimeRule::simpson, TimeRule::trapezoid}, "time rule");
    r.get("j_eps_ratio", e.j_eps_ratio);
    r.get("j_levels", e.j_levels);
    r.get("j_nodes", e.j_nodes);
    r.get("j_mode_cutoff", e.j_mode_cutoff);
    r.get("write_term_fields", c.write_term_fields);
    r.get("csv_stride", c.csv_stride);
    r.finish();
  }

  if (root.has("verify")) {
    Reader r(root.at("verify"), root.child("verify"));
    auto& v = c.verify;
    if (r.has("variants")) {
      c.variants.clear();
      for (const auto& x : r.at("variants"))
        c.variants.push_back(parse_enum(x.get<std::string>(),
                                        {Variant::prop_lowt, Variant::prop_lows, Variant::thm_st, Variant::thm_t},
                                        "variant"));
    }
    r.get("window_fraction", v.window_fraction);
    r.get("region_fraction", v.region_fraction);
    r.get("tol_exponent", v.tol_exponent);
    r.get("tol_low_order", v.tol_low_order);
    r.get("tol_slope", v.tol_slope);
    r.get("tol_decay", v.tol_decay);
    r.get("noise_factor", v.noise_factor);
    r.get("scaling_tol_exact", v.scaling_tol_exact);
    r.get("scaling_tol_quadrature", v.scaling_tol_quadrature);
    r.get("free_space_order", v.free_space_order);
    r.get("free_space_tau", v.free_space_tau);
    r.get("mus_inf", v.mus_inf);
    r.get("mus_l1", v.mus_l1);
    r.get("lemma_mus", v.lemma_mus);
    r.get("weight_k", v.weight_k);
    r.get("lemma_count", c.lemma_count);
    r.finish();
  }

  if (root.has("acceptance")) {
    Reader r(root.at("acceptance"), root.child("acceptance"));
    auto& a = c.acceptance;
    r.get("kernel_points", a.kernel_points);
    r.get("seed", a.seed);
    r.get("kernel_tol", a.kernel_tol);
    r.get("kernel_mass_floor", a.kernel_mass_floor);
    r.get("trace_tol", a.trace_tol);
    r.get("mean_tol", a.mean_tol);
    r.get("divergence_tol", a.divergence_tol);
    r.get("heat_tol", a.heat_tol);
    r.get("flux_tol", a.flux_tol);
    r.get("curl_tol", a.curl_tol);
    r.get("family_tol", a.family_tol);
    r.get("drift_tol", a.drift_tol);
    r.get("drift_t_max", a.drift_t_max);
    r.get("drift_points", a.drift_points);
    r.get("j_time", a.j_time);
    r.get("j_stability_tol", a.j_stability_tol);
    r.get("max_inconclusive", a.max_inconclusive);
    if (r.has("check_grid")) a.check_grid = read_grid(r.at("check_grid"), r.child("check_grid"), a.check_grid);
    r.get("check_time", a.check_time);
    r.get("scaling_lambdas", a.scaling_lambdas);
    r.finish();
  }
  root.finish();

  if (c.threads < 0) throw ConfigError("threads must be >= 0");
  if (c.snapshot_count < 6) throw ConfigError("snapshot_count must be at least 6 for rate fits");
  if (!(c.snapshot_first_fraction > 0.0 && c.snapshot_first_fraction < 1.0))
    throw ConfigError("snapshot_first_fraction must lie in (0, 1)");
  if (c.csv_stride < 1) throw ConfigError("csv_stride must be positive");
  if (c.lemma_count < 6) throw ConfigError("lemma_count must be at least 6");
  if (c.variants.empty()) throw ConfigError("verify.variants is empty");
  try {
    c.grid.validate();
    c.expansion.profile_grid.validate();
    c.acceptance.check_grid.validate();
    validate(c.solver_config());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("cannot read config " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

/// Resolved configuration plus the tolerances fixed in code.
inline json meta_json(const RunConfig& c, const std::string& stage) {
  json j;
  j["stage"] = stage;
  j["config"] = to_json(c);
  j["fixed_tolerances"] = fixed_tolerances();
  return j;
}

} // namespace nsfar
