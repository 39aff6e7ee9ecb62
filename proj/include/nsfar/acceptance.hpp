#pragma once

// The ten acceptance criteria, each reduced to one pass/fail line.

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nsfar/config.hpp"
#include "nsfar/expansion.hpp"
#include "nsfar/fourier_oracle.hpp"
#include "nsfar/kernels.hpp"
#include "nsfar/solver.hpp"
#include "nsfar/verify.hpp"

namespace nsfar {

struct Criterion {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::string criterion_line(const Criterion& c) {
  std::ostringstream s;
  s << "criterion " << c.id << " " << (c.pass ? "PASS" : "FAIL") << " " << c.name << ": " << c.detail;
  return s.str();
}

inline CheckReport criterion_row(const Criterion& c) {
  CheckReport r;
  r.claim_tag = "criterion_" + std::to_string(c.id) + ":" + c.name;
  r.verdict = c.pass ? Verdict::pass : Verdict::fail;
  r.notes = c.detail;
  return r;
}

namespace acceptance_detail {

inline std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << v;
  return s.str();
}

inline const CheckReport* find_row(const std::vector<CheckReport>& rows, const std::string& tag, double q, double mu) {
  for (const auto& r : rows)
    if (r.claim_tag == tag && r.q == q && r.mu == mu) return &r;
  return nullptr;
}

} // namespace acceptance_detail

/// Closed-form kernels against the Fourier-integral oracle, and the Riesz trace identity.
inline Criterion criterion_kernels(const AcceptanceOptions& a) {
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> ut(0.3, 3.0), ux(-4.0, 4.0);
  const auto low = indices_up_to(3);
  double worst = 0.0, worst_trace = 0.0;
  for (int k = 0; k < a.kernel_points; ++k) {
    const SpaceTimePoint p{ut(rng), ux(rng), ux(rng)};
    const auto family = static_cast<KernelFamily>(k % 3);
    const MultiIndex b = low[static_cast<std::size_t>(k) % low.size()];
    int l = 0;
    MultiIndex beta = b;
    if (family == KernelFamily::riesz_tensor && b.order() >= 2) {
      l = 1;
      beta = b.order() == 2 ? MultiIndex{0, 0} : (b.a1 > 0 ? MultiIndex{1, 0} : MultiIndex{0, 1});
    }
    const auto o = fourier_oracle({l, beta, family}, p);
    std::array<double, 4> closed{};
    int count = 1;
    switch (family) {
      case KernelFamily::heat: closed[0] = kernels::gauss_deriv(beta, p); break;
      case KernelFamily::biot_savart: {
        const Vec2 v = kernels::bs_kernel_deriv(beta, p);
        closed = {v[0], v[1], 0, 0};
        count = 2;
        break;
      }
      case KernelFamily::riesz_tensor: {
        const Mat2 m = kernels::riesz_tensor_deriv(l, beta, p);
        closed = {m[0], m[1], m[2], m[3]};
        count = 4;
        break;
      }
    }
    for (int i = 0; i < count; ++i) {
      const double ref = o.value.entries[i];
      worst = std::max(worst, std::abs(closed[i] - ref) / std::max(std::abs(ref), a.kernel_mass_floor * o.integrand_mass));
    }
    // R_1^2 G + R_2^2 G = -G; the tensor holds (R_2 R_1, R_2 R_2; -R_1 R_1, -R_1 R_2) G
    const Mat2 t = kernels::riesz_tensor(p);
    worst_trace = std::max(worst_trace, std::abs(t[2] - t[1] + kernels::gauss(p)));
  }
  Criterion c{1, "kernel_oracle", worst <= a.kernel_tol && worst_trace <= a.trace_tol, ""};
  c.detail = std::to_string(a.kernel_points) + " points, max relative error " + acceptance_detail::num(worst) +
             " (tol " + acceptance_detail::num(a.kernel_tol) + "), trace identity " +
             acceptance_detail::num(worst_trace) + " (tol " + acceptance_detail::num(a.trace_tol) + ")";
  return c;
}

inline Criterion criterion_scaling(const std::vector<CheckReport>& scaling_rows) {
  int bad = 0;
  double worst = 0.0;
  for (const auto& r : scaling_rows) {
    if (r.verdict != Verdict::pass) ++bad;
    worst = std::max(worst, r.measured_exponent);
  }
  Criterion c{2, "scaling_suite", !scaling_rows.empty() && bad == 0, ""};
  c.detail = std::to_string(scaling_rows.size()) + " identities, " + std::to_string(bad) +
             " failing, max relative deviation " + acceptance_detail::num(worst);
  return c;
}

/// Conservation and incompressibility on the trajectory, and the heat-flow limit.
inline Criterion criterion_solver(const Trajectory& tr, const AcceptanceOptions& a) {
  double mean_err = 0.0, flux_err = 0.0, div_err = 0.0;
  for (const auto& d : tr.diagnostics) {
    mean_err = std::max(mean_err, std::abs(d.mean));
    if (d.flux_scale > 0) flux_err = std::max(flux_err, d.flux_abs / d.flux_scale);
  }
  for (const auto& s : tr.snapshots)
    div_err = std::max(div_err, max_abs(divergence(biot_savart_velocity(s.omega)).data));

  SolverConfig lin = tr.config;
  lin.nonlinear = false;
  lin.t_max = std::min(2.0, lin.t_max);
  lin.snapshot_times = {0.5 * lin.t_max, lin.t_max};
  const auto heat_run = run(tr.omega0, lin);
  double heat_err = 0.0;
  for (const auto& s : heat_run.snapshots) {
    const auto ref = heat_flow(tr.omega0, s.t);
    for (std::size_t k = 0; k < ref.data.size(); ++k)
      heat_err = std::max(heat_err, std::abs(ref.data[k] - s.omega.data[k]));
  }
  Criterion c{3, "solver_sanity",
              mean_err <= a.mean_tol && div_err <= a.divergence_tol && heat_err <= a.heat_tol && flux_err <= a.flux_tol,
              ""};
  using acceptance_detail::num;
  c.detail = "mean " + num(mean_err) + " (tol " + num(a.mean_tol) + "), divergence " + num(div_err) + " (tol " +
             num(a.divergence_tol) + "), heat flow " + num(heat_err) + " (tol " + num(a.heat_tol) +
             "), flux cancellation " + num(flux_err) + " (tol " + num(a.flux_tol) + ")";
  return c;
}

/// Omega_m against the curl of U_{m-1} + U_{m-1}^inf, eighth-order differences in the interior.
inline Criterion criterion_curl(const ExpansionCoefficients& coeffs, const AcceptanceOptions& a) {
  GridSpec g = a.check_grid;
  g.n *= 2;
  g.L *= 0.5;
  const double t = a.check_time;
  const double w8[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  double worst = 0.0;
  for (int m = 2; m <= 3; ++m) {
    auto u = build_U(m - 1, t, g, coeffs);
    u += build_U_inf(m - 1, t, g, coeffs);
    const auto w = build_Omega(m, t, g, coeffs);
    auto at = [&](const std::vector<double>& f, int i, int j) { return f[static_cast<std::size_t>(j) * g.n + i]; };
    for (int j = g.n / 4; j < 3 * g.n / 4; ++j)
      for (int i = g.n / 4; i < 3 * g.n / 4; ++i) {
        double d1u2 = 0.0, d2u1 = 0.0;
        for (int k = 1; k <= 4; ++k) {
          d1u2 += w8[k - 1] * (at(u.c2, i + k, j) - at(u.c2, i - k, j));
          d2u1 += w8[k - 1] * (at(u.c1, i, j + k) - at(u.c1, i, j - k));
        }
        worst = std::max(worst, std::abs((d1u2 - d2u1) / g.h() - w.at(i, j)));
      }
  }
  return {4, "curl_consistency", worst <= a.curl_tol,
          "max |curl(U + U_inf) - Omega| for m = 2, 3: " + acceptance_detail::num(worst) + " (tol " +
              acceptance_detail::num(a.curl_tol) + ")"};
}

inline Criterion criterion_vorticity(const std::vector<CheckReport>& rows) {
  const auto* r = acceptance_detail::find_row(rows, "vorticity_decay", kInf, 0.0);
  if (!r) return {5, "vorticity_decay", false, "row missing"};
  return {5, "vorticity_decay", r->verdict == Verdict::pass,
          "exponent " + acceptance_detail::num(r->measured_exponent) + " vs " +
              acceptance_detail::num(r->expected_exponent) + "; " + r->notes};
}

inline Criterion criterion_low_order(const std::vector<CheckReport>& rows) {
  const auto* a = acceptance_detail::find_row(rows, "prop_lowt", kInf, 0.0);
  const auto* b = acceptance_detail::find_row(rows, "prop_lowt:weighted_data", kInf, 0.0);
  if (!a || !b) return {6, "low_order_expansion", false, "rows missing"};
  using acceptance_detail::num;
  return {6, "low_order_expansion", a->verdict == Verdict::pass && b->verdict == Verdict::pass,
          "upper bound: exponent " + num(a->measured_exponent) + " (" + to_string(a->verdict) +
              "); log_power 1 fit: exponent " + num(b->measured_exponent) + " vs " + num(b->expected_exponent) +
              " (" + to_string(b->verdict) + ")"};
}

/// Two-sided band on each mu of the full expansion, plus the slope across mu.
inline Criterion criterion_family(const std::vector<CheckReport>& rows, const VerifyOptions& v,
                                  const AcceptanceOptions& a) {
  using acceptance_detail::num;
  Criterion c{7, "mu_family", true, ""};
  int inconclusive = 0;
  for (double mu : v.mus_inf) {
    const auto* r = acceptance_detail::find_row(rows, "thm_st", kInf, mu);
    if (!r) return {7, "mu_family", false, "row missing for mu " + num(mu)};
    bool ok;
    if (r->verdict == Verdict::inconclusive) {
      ++inconclusive;
      ok = true;
    } else {
      ok = std::abs(r->measured_exponent - r->expected_exponent) <= a.family_tol;
    }
    c.pass = c.pass && ok;
    c.detail += "mu " + num(mu) + ": " + num(r->measured_exponent) + " vs " + num(r->expected_exponent) +
                (r->verdict == Verdict::inconclusive ? " (inconclusive)" : ok ? " (in band)" : " (out of band)") + "; ";
  }
  const auto* s = acceptance_detail::find_row(rows, "thm_st:mu_slope", kInf, 0.0);
  if (!s) return {7, "mu_family", false, "slope row missing"};
  c.pass = c.pass && s->verdict == Verdict::pass && inconclusive <= a.max_inconclusive;
  c.detail += "slope " + num(s->measured_exponent) + " (tol " + num(v.tol_slope) + "), band " + num(a.family_tol);
  return c;
}

/// t^{5/2} |K_3(t)|_inf / log t over the last decade before drift_t_max.
inline std::vector<std::pair<double, double>> k3_sweep(const ExpansionCoefficients& coeffs,
                                                       const AcceptanceOptions& a) {
  std::vector<std::pair<double, double>> out;
  const double t1 = a.drift_t_max / 10.0;
  for (int k = 0; k <= a.drift_points; ++k) {
    const double t = t1 * std::pow(10.0, double(k) / a.drift_points);
    GridSpec g = a.check_grid;
    g.L = 0.5 * a.check_grid.L * std::sqrt(t);
    const double sup = weighted_norm(build_K(3, t, g, coeffs), 0.0, kInf);
    out.push_back({t, sup * std::pow(t, 2.5) / std::log(t)});
  }
  return out;
}

inline Criterion criterion_k_sharpness(const ExpansionCoefficients& coeffs, const AcceptanceOptions& a) {
  const auto sweep = k3_sweep(coeffs, a);
  double lo = kInf, hi = 0.0, sum = 0.0;
  for (const auto& [t, v] : sweep) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  const double mean = sum / sweep.size();
  const double drift = mean > 0 ? (hi - lo) / mean : kInf;
  using acceptance_detail::num;
  return {8, "k_sharpness", mean > 0 && drift <= a.drift_tol,
          "t in [" + num(sweep.front().first) + ", " + num(sweep.back().first) + "], scaled norm " + num(mean) +
              ", relative drift " + num(drift) + " (tol " + num(a.drift_tol) + ")"};
}

inline Criterion criterion_j(const ExpansionCoefficients& coeffs, const AcceptanceOptions& a) {
  using acceptance_detail::num;
  const GridSpec& g = a.check_grid;
  ExpansionOptions o = coeffs.options();
  try {
    const auto r = build_J_detailed(3, a.j_time, g, coeffs, o);
    bool monotone = true;
    for (std::size_t k = 1; k < r.increments.size(); ++k) monotone = monotone && r.increments[k] < r.increments[k - 1];
    o.j_nodes *= 2;
    const auto r2 = build_J_detailed(3, a.j_time, g, coeffs, o);
    double diff = 0.0, sup = 0.0;
    for (std::size_t k = 0; k < r.field.c1.size(); ++k) {
      diff = std::max(diff, std::hypot(r.field.c1[k] - r2.field.c1[k], r.field.c2[k] - r2.field.c2[k]));
      sup = std::max(sup, std::hypot(r.field.c1[k], r.field.c2[k]));
    }
    const double rel = sup > 0 ? diff / sup : kInf;
    std::string inc;
    for (double x : r.increments) inc += num(x) + " ";
    return {9, "j_convergence", monotone && rel <= a.j_stability_tol,
            "increments " + inc + (monotone ? "(shrinking)" : "(not shrinking)") +
                ", relative change under doubled depth " + num(rel) + " (tol " + num(a.j_stability_tol) + ")"};
  } catch (const IntegrationError& e) {
    return {9, "j_convergence", false, e.what()};
  }
}

inline Criterion criterion_lemma(const std::vector<CheckReport>& rows, const VerifyOptions& v) {
  Criterion c{10, "linear_part", true, ""};
  for (double mu : v.lemma_mus) {
    const auto* r = acceptance_detail::find_row(rows, "linear_part", kInf, mu);
    if (!r) return {10, "linear_part", false, "row missing"};
    c.pass = c.pass && r->verdict == Verdict::pass;
    c.detail += "mu " + acceptance_detail::num(mu) + ": " + acceptance_detail::num(r->measured_exponent) + " vs " +
                acceptance_detail::num(r->expected_exponent) + " (" + to_string(r->verdict) + "); ";
  }
  c.detail += "tol " + acceptance_detail::num(v.tol_decay);
  return c;
}

} // namespace nsfar
