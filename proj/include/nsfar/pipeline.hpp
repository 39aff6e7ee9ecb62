#pragma once

// On-disk artifacts and the gen / solve / expand / verify stages.
//
// <out>/initial/     meta, omega0, omega0.csv, initial_moments.csv
// <out>/trajectory/  meta, omega0, snap_<k>, moments.csv, flux.csv,
//                    initial_moments.csv, diagnostics.csv
// <out>/terms/       meta, terms.csv, coefficients.csv, fields/<kind>_<order>[.csv]
// <out>/report/      meta, report.csv, summary.txt

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nsfar/acceptance.hpp"
#include "nsfar/config.hpp"
#include "nsfar/expansion.hpp"
#include "nsfar/field_io.hpp"
#include "nsfar/initial_data.hpp"
#include "nsfar/parallel.hpp"
#include "nsfar/solver.hpp"
#include "nsfar/verify.hpp"

namespace nsfar {

namespace fs = std::filesystem;

class Log {
public:
  explicit Log(bool quiet = false) : quiet_(quiet), start_(std::chrono::steady_clock::now()) {}
  void operator()(const std::string& msg) const {
    if (quiet_) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::fprintf(stderr, "[%7.1fs] %s\n", s, msg.c_str());
  }

private:
  bool quiet_;
  std::chrono::steady_clock::time_point start_;
};

struct Paths {
  fs::path root;
  fs::path initial() const { return root / "initial"; }
  fs::path trajectory() const { return root / "trajectory"; }
  fs::path terms() const { return root / "terms"; }
  fs::path report() const { return root / "report"; }
};

namespace pipeline_detail {

/// Shortest decimal form that parses back to the same double.
inline std::string exact(double v) {
  char buf[32];
  for (int p = 15; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::ofstream open(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

inline void write_meta(const fs::path& dir, const RunConfig& c, const std::string& stage) {
  auto f = open(dir / "meta");
  f << meta_json(c, stage).dump(2) << '\n';
}

/// Parsed rows of a headed CSV of numbers.
inline std::vector<std::vector<double>> read_numeric_csv(const fs::path& p, std::size_t columns) {
  std::ifstream f(p);
  if (!f) throw DependencyError("missing dependency: " + p.string());
  std::string line;
  std::getline(f, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != columns) throw IoError("malformed row in " + p.string());
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_initial_moments(const fs::path& p, const std::vector<double>& m) {
  auto f = open(p);
  f << "alpha1,alpha2,value\n";
  const auto idx = indices_up_to(kInitialMomentOrder);
  for (std::size_t k = 0; k < idx.size(); ++k) f << idx[k].a1 << ',' << idx[k].a2 << ',' << exact(m[k]) << '\n';
}

inline std::vector<double> read_initial_moments(const fs::path& p) {
  const auto rows = read_numeric_csv(p, 3);
  const auto idx = indices_up_to(kInitialMomentOrder);
  if (rows.size() != idx.size()) throw IoError("wrong number of initial moments in " + p.string());
  std::vector<double> m(idx.size());
  for (const auto& r : rows) m.at(flat_index({static_cast<int>(r[0]), static_cast<int>(r[1])})) = r[2];
  return m;
}

inline std::string snap_name(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "snap_%03zu", k);
  return buf;
}

} // namespace pipeline_detail

inline void write_trajectory(const fs::path& dir, const Trajectory& tr, const RunConfig& c) {
  using namespace pipeline_detail;
  fs::create_directories(dir);
  write_meta(dir, c, "solve");
  io::write_field(dir / "omega0", tr.omega0);
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) io::write_field(dir / snap_name(k), tr.snapshots[k].omega);
  write_initial_moments(dir / "initial_moments.csv", tr.moments.initial);

  const auto& mt = tr.moments;
  {
    auto f = open(dir / "flux.csv");
    f << "t,beta1,beta2,component,value\n";
    for (std::size_t n = 0; n < mt.times.size(); ++n)
      for (const auto& b : indices_up_to(kFluxOrder))
        for (int comp = 0; comp < 2; ++comp)
          f << exact(mt.times[n]) << ',' << b.a1 << ',' << b.a2 << ',' << comp + 1 << ','
            << exact(mt.flux_moment(n, b, comp)) << '\n';
  }
  {
    auto f = open(dir / "moments.csv");
    f << "t,l,beta1,beta2,component,value\n";
    std::vector<std::tuple<int, MultiIndex, int, std::vector<double>>> hist;
    for (int k = 1; k <= kFluxOrder; ++k)
      for (const auto& ix : time_space_indices(k))
        for (int comp = 0; comp < 2; ++comp)
          hist.emplace_back(ix.l, ix.beta, comp, mt.history(ix.l, ix.beta, comp, c.expansion.rule));
    for (std::size_t n = 0; n < mt.times.size(); ++n)
      for (const auto& [l, b, comp, h] : hist)
        f << exact(mt.times[n]) << ',' << l << ',' << b.a1 << ',' << b.a2 << ',' << comp + 1 << ',' << exact(h[n])
          << '\n';
  }
  {
    auto f = open(dir / "diagnostics.csv");
    f << "t,omega_l1,omega_l2,omega_linf,u_l2,u_linf,cfl,mean,flux_abs,flux_scale,boundary\n";
    for (const auto& d : tr.diagnostics)
      f << exact(d.t) << ',' << exact(d.omega_l1) << ',' << exact(d.omega_l2) << ',' << exact(d.omega_linf) << ','
        << exact(d.u_l2) << ',' << exact(d.u_linf) << ',' << exact(d.cfl) << ',' << exact(d.mean) << ','
        << exact(d.flux_abs) << ',' << exact(d.flux_scale) << ',' << exact(d.boundary) << '\n';
  }
}

inline Trajectory read_trajectory(const fs::path& dir, const RunConfig& c) {
  using namespace pipeline_detail;
  if (!fs::exists(dir / "flux.csv")) throw DependencyError("missing dependency: no trajectory in " + dir.string());
  Trajectory tr;
  tr.config = c.solver_config();
  tr.omega0 = io::read_scalar(dir / "omega0");
  if (tr.omega0.grid.n != c.grid.n || tr.omega0.grid.L != c.grid.L)
    throw DependencyError("trajectory grid does not match the config; rerun solve");
  tr.moments.initial = read_initial_moments(dir / "initial_moments.csv");
  const std::size_t per_node = 2 * indices_up_to(kFluxOrder).size();
  const auto rows = read_numeric_csv(dir / "flux.csv", 5);
  if (rows.empty() || rows.size() % per_node != 0) throw IoError("flux.csv is truncated");
  for (std::size_t r = 0; r < rows.size(); r += per_node) {
    tr.moments.times.push_back(rows[r][0]);
    std::array<double, 2 * kFluxCount> node{};
    for (std::size_t q = r; q < r + per_node; ++q) {
      const MultiIndex b{static_cast<int>(rows[q][1]), static_cast<int>(rows[q][2])};
      node[2 * flat_index(b) + static_cast<int>(rows[q][3]) - 1] = rows[q][4];
    }
    tr.moments.flux.push_back(node);
  }
  for (std::size_t k = 0; k < tr.config.snapshot_times.size(); ++k) {
    const fs::path p = dir / snap_name(k);
    if (!fs::exists(p)) throw DependencyError("missing dependency: " + p.string());
    Snapshot s;
    s.omega = io::read_scalar(p);
    s.t = s.omega.time;
    tr.snapshots.push_back(std::move(s));
  }
  for (const auto& r : read_numeric_csv(dir / "diagnostics.csv", 11)) {
    StepDiagnostics d;
    d.t = r[0];
    d.omega_l1 = r[1];
    d.omega_l2 = r[2];
    d.omega_linf = r[3];
    d.u_l2 = r[4];
    d.u_linf = r[5];
    d.cfl = r[6];
    d.mean = r[7];
    d.flux_abs = r[8];
    d.flux_scale = r[9];
    d.boundary = r[10];
    tr.diagnostics.push_back(d);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Stages

inline ScalarField cmd_gen(const RunConfig& c, const Paths& out, const Log& log) {
  log("generating initial vorticity on " + std::to_string(c.grid.n) + "^2");
  const auto w0 = make_initial_vorticity(c.initial, c.grid);
  const fs::path dir = out.initial();
  fs::create_directories(dir);
  pipeline_detail::write_meta(dir, c, "gen");
  io::write_field(dir / "omega0", w0);
  io::write_csv(dir / "omega0.csv", w0, c.csv_stride);
  pipeline_detail::write_initial_moments(dir / "initial_moments.csv", moments_up_to(w0, kInitialMomentOrder));
  return w0;
}

inline Trajectory cmd_solve(const RunConfig& c, const Paths& out, const Log& log) {
  const fs::path src = out.initial() / "omega0";
  if (!fs::exists(src)) throw DependencyError("missing dependency: " + src.string() + " (run gen first)");
  const auto w0 = io::read_scalar(src);
  if (w0.grid.n != c.grid.n || w0.grid.L != c.grid.L)
    throw DependencyError("initial field grid does not match the config; rerun gen");
  log("solving to t = " + pipeline_detail::exact(c.solver.t_max));
  const auto tr = run(w0, c.solver_config());
  log("solve finished after " + std::to_string(tr.moments.times.size() - 1) + " steps");
  write_trajectory(out.trajectory(), tr, c);
  return tr;
}

/// Times at which terms.csv records norms: the snapshot times in the fit window.
inline std::vector<double> term_times(const RunConfig& c) {
  std::vector<double> ts;
  const double T = c.solver.t_max;
  for (double t : c.solver_config().snapshot_times)
    if (t >= T * c.verify.window_fraction * (1 - 1e-12)) ts.push_back(t);
  return ts;
}

inline void write_coefficients(const fs::path& p, const ExpansionCoefficients& co) {
  using pipeline_detail::exact;
  auto f = pipeline_detail::open(p);
  f << "l,beta1,beta2,component,finite,tail,value,uncertainty,warning\n";
  for (const auto& [key, e] : co.infinite())
    for (int j = 0; j < 2; ++j)
      f << key.first << ',' << key.second.a1 << ',' << key.second.a2 << ',' << j + 1 << ',' << exact(e.finite[j])
        << ',' << exact(e.tail[j]) << ',' << exact(e.value[j]) << ',' << exact(e.uncertainty[j]) << ','
        << (e.warning ? 1 : 0) << '\n';
}

inline ExpansionCoefficients cmd_expand(const RunConfig& c, const Trajectory& tr, const Paths& out, const Log& log) {
  using pipeline_detail::exact;
  log("building expansion coefficients");
  const auto co = ExpansionCoefficients::from_table(tr.moments, c.expansion);
  for (const auto& [key, e] : co.infinite())
    if (e.warning)
      log("warning: modeled tail exceeds " + exact(c.expansion.tail_warning) + " of S_inf(l=" +
          std::to_string(key.first) + ", " + key.second.str() + ")");
  const fs::path dir = out.terms();
  fs::create_directories(dir);
  pipeline_detail::write_meta(dir, c, "expand");
  write_coefficients(dir / "coefficients.csv", co);

  const GridSpec& g = c.grid;
  const auto times = term_times(c);
  auto f = pipeline_detail::open(dir / "terms.csv");
  f << "kind,order,t,linf,l2,l1,tail_uncertainty\n";
  for (const auto& [kind, m] : all_term_kinds()) {
    log("term " + to_string(kind) + "_" + std::to_string(m));
    for (double t : times) {
      const auto term = build_term(kind, m, t, g, co);
      double n[3];
      std::visit(
          [&](const auto& fld) {
            n[0] = weighted_norm(fld, 0.0, kInf);
            n[1] = weighted_norm(fld, 0.0, 2.0);
            n[2] = weighted_norm(fld, 0.0, 1.0);
          },
          term.field);
      f << to_string(kind) << ',' << m << ',' << exact(t) << ',' << exact(n[0]) << ',' << exact(n[1]) << ','
        << exact(n[2]) << ',' << exact(term.tail_uncertainty) << '\n';
      if (c.write_term_fields && t == times.back()) {
        const std::string name = to_string(kind) + "_" + std::to_string(m);
        std::visit(
            [&](const auto& fld) {
              io::write_field(dir / "fields" / name, fld);
              io::write_csv(dir / "fields" / (name + ".csv"), fld, c.csv_stride);
            },
            term.field);
      }
    }
  }
  if (!f) throw IoError("write failed: terms.csv");
  return co;
}

struct VerifyResult {
  std::vector<CheckReport> rows;
  std::vector<Criterion> criteria;
  bool failed() const {
    return any_failed(rows) || std::any_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return !c.pass; });
  }
};

/// Every suite and acceptance criterion on one trajectory.
inline VerifyResult verify_all(const RunConfig& c, const Trajectory& tr, const ExpansionCoefficients& co,
                               const Log& log) {
  VerifyResult out;
  auto& rows = out.rows;
  const VerifyOptions& v = c.verify;
  auto append = [&](const std::vector<CheckReport>& r) { rows.insert(rows.end(), r.begin(), r.end()); };

  log("linear-part suite");
  append(lemma_suite(tr.omega0, geometric_times(c.solver.t_max, v.window_fraction, c.lemma_count), v));
  log("velocity samples");
  const auto samples = window_samples(tr, v);
  log("residual series");
  const auto series = residual_series(c.variants, samples, co);
  for (std::size_t k = 0; k < c.variants.size(); ++k) append(theorem_suite(c.variants[k], series[k], c.grid.L, v));
  log("vorticity suite");
  append(vorticity_suite(samples, co, v.weight_k, v));
  log("scaling suite");
  const auto scaling = scaling_suite(scaling_cases(), c.acceptance.scaling_lambdas, {c.acceptance.check_time},
                                     c.acceptance.check_grid, co, v);
  append(scaling);

  const auto& a = c.acceptance;
  log("acceptance criteria");
  out.criteria.push_back(criterion_kernels(a));
  out.criteria.push_back(criterion_scaling(scaling));
  out.criteria.push_back(criterion_solver(tr, a));
  out.criteria.push_back(criterion_curl(co, a));
  out.criteria.push_back(criterion_vorticity(rows));
  out.criteria.push_back(criterion_low_order(rows));
  out.criteria.push_back(criterion_family(rows, v, a));
  out.criteria.push_back(criterion_k_sharpness(co, a));
  out.criteria.push_back(criterion_j(co, a));
  out.criteria.push_back(criterion_lemma(rows, v));
  for (const auto& cr : out.criteria) rows.push_back(criterion_row(cr));
  return out;
}

inline void require_terms(const Paths& out) {
  if (!fs::exists(out.terms() / "terms.csv"))
    throw DependencyError("missing dependency: " + (out.terms() / "terms.csv").string() + " (run expand first)");
}

inline VerifyResult cmd_verify(const RunConfig& c, const Trajectory& tr, const Paths& out, const Log& log) {
  require_terms(out);
  const auto co = ExpansionCoefficients::from_table(tr.moments, c.expansion);
  auto res = verify_all(c, tr, co, log);
  const fs::path dir = out.report();
  fs::create_directories(dir);
  pipeline_detail::write_meta(dir, c, "verify");
  write_report_csv((dir / "report.csv").string(), res.rows);
  auto f = pipeline_detail::open(dir / "summary.txt");
  f << summary_text(res.rows);
  for (const auto& cr : res.criteria) f << criterion_line(cr) << '\n';
  return res;
}

} // namespace nsfar
