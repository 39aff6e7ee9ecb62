#pragma once

// Decay-rate fits of residual norms and the claim suites built on them.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nsfar/errors.hpp"
#include "nsfar/expansion.hpp"
#include "nsfar/fields.hpp"
#include "nsfar/free_space.hpp"
#include "nsfar/solver.hpp"

namespace nsfar {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct RateFit {
  double exponent = 0.0;
  int log_power = 0;
  double amplitude = 0.0;
  double r_squared = 0.0;
  double t_min = 0.0, t_max = 0.0;
  int n_points = 0;
};

/// Least squares of log(v) - p log(log t) against log t.
inline RateFit rate_fit(const std::vector<double>& times, const std::vector<double>& values, int log_power) {
  if (times.size() != values.size()) throw FitError("times and values differ in length");
  if (log_power < 0 || log_power > 2) throw FitError("log_power must be 0, 1 or 2");
  const std::size_t n = times.size();
  if (n < 6) throw FitError("rate fit needs at least 6 points, got " + std::to_string(n));
  for (std::size_t k = 0; k < n; ++k) {
    if (!(values[k] > 0.0) || !std::isfinite(values[k])) throw FitError("rate fit needs positive finite values");
    if (k > 0 && !(times[k] > times[k - 1])) throw FitError("rate fit needs increasing times");
  }
  if (!(times.front() > 0.0) || times.back() < 4.0 * times.front())
    throw FitError("rate fit window must span a factor of at least 4 in t");
  if (log_power > 0 && !(times.front() > 1.0)) throw FitError("log-corrected fit needs t > 1");
  std::vector<double> x(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = std::log(times[k]);
    y[k] = std::log(values[k]);
    if (log_power > 0) y[k] -= log_power * std::log(std::log(times[k]));
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw FitError("degenerate spread in log t");
  RateFit f;
  f.exponent = sxy / sxx;
  f.amplitude = std::exp(my - f.exponent * mx);
  double ssr = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - (my + f.exponent * (x[k] - mx));
    ssr += r * r;
  }
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  if (std::abs(f.exponent) < 1e-12 * (1 + std::abs(my))) f.exponent = 0.0;
  f.log_power = log_power;
  f.t_min = times.front();
  f.t_max = times.back();
  f.n_points = static_cast<int>(n);
  return f;
}

enum class Verdict { pass, fail, inconclusive, reported };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::reported: return "reported";
  }
  return "?";
}

/// How a measured exponent is compared with the expected one.
enum class Gate { upper_bound, two_sided, reported };

struct CheckReport {
  std::string claim_tag;
  double q = kInf;
  double mu = 0.0;
  double expected_exponent = std::numeric_limits<double>::quiet_NaN();
  int log_power = 0;
  double measured_exponent = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::reported;
  std::string notes;
  std::optional<RateFit> fit;
};

inline double gamma_exponent(double q) { return std::isinf(q) ? 1.0 : 1.0 - 1.0 / q; }

struct VerifyOptions {
  double window_fraction = 1.0 / 16.0; // fit window [T * fraction, T]
  double region_fraction = 0.75;       // norms over |x| <= fraction * L
  double tol_exponent = 0.25;
  double tol_low_order = 0.15;
  double tol_slope = 0.1;
  double tol_decay = 0.2;
  double noise_factor = 10.0;
  double scaling_tol_exact = 1e-9;
  double scaling_tol_quadrature = 1e-6;
  int free_space_order = 6;
  double free_space_tau = 0.25;        // Hermite-fit width tau = min(t + offset, L^2 / 144)
  std::vector<double> mus_inf{0.0, 2.0, 4.0};
  std::vector<double> mus_l1{0.0, 2.0};
  std::vector<double> lemma_mus{0.0, 7.0};
  int weight_k = 4;
};

/// One residual norm series and its noise floor, fitted under a gate.
inline CheckReport judge(std::string tag, double q, double mu, double expected, int log_power, Gate gate, double tol,
                         const std::vector<double>& times, const std::vector<double>& values,
                         const std::vector<double>& noise, double noise_factor) {
  CheckReport r;
  r.claim_tag = std::move(tag);
  r.q = q;
  r.mu = mu;
  r.expected_exponent = expected;
  r.log_power = log_power;
  std::vector<double> ts, vs;
  std::size_t dropped = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!noise.empty() && values[k] <= noise_factor * noise[k]) {
      ++dropped;
      continue;
    }
    ts.push_back(times[k]);
    vs.push_back(values[k]);
  }
  std::ostringstream note;
  note << std::setprecision(3);
  if (dropped > 0) note << dropped << " points within " << noise_factor << "x noise floor; ";
  try {
    const RateFit f = rate_fit(ts, vs, log_power);
    r.fit = f;
    r.measured_exponent = f.exponent;
    r.r2 = f.r_squared;
    note << "window [" << f.t_min << ", " << f.t_max << "], tol " << tol;
    const double gap = f.exponent - expected;
    switch (gate) {
      case Gate::upper_bound: r.verdict = gap <= tol ? Verdict::pass : Verdict::fail; break;
      case Gate::two_sided: r.verdict = std::abs(gap) <= tol ? Verdict::pass : Verdict::fail; break;
      case Gate::reported: r.verdict = Verdict::reported; break;
    }
  } catch (const FitError& e) {
    if (dropped > 0) {
      r.verdict = Verdict::inconclusive;
      note << "residual below noise floor";
    } else {
      r.verdict = gate == Gate::reported ? Verdict::reported : Verdict::fail;
      note << "fit error: " << e.what();
    }
  }
  if (r.verdict == Verdict::fail && dropped > 0) r.verdict = Verdict::inconclusive;
  r.notes = note.str();
  return r;
}

// ---------------------------------------------------------------------------
// Scaling suite

struct ScalingCase {
  TermKind kind;
  int order;
};

inline std::vector<ScalingCase> scaling_cases() {
  std::vector<ScalingCase> out;
  for (const auto& [k, m] : all_term_kinds())
    if (k != TermKind::U_t && k != TermKind::K) out.push_back({k, m});
  return out;
}

/// max |lambda^{2+m} F(lambda^2 t, lambda x) - F(t, x)| / max |F(t, x)| on matching grids.
inline double scaling_deviation(const ScalingCase& c, double t, double lambda, const GridSpec& g,
                                const ExpansionCoefficients& coeffs) {
  GridSpec h = g;
  h.L = lambda * g.L;
  const auto a = build_term(c.kind, c.order, t, g, coeffs);
  const auto b = build_term(c.kind, c.order, lambda * lambda * t, h, coeffs);
  const double f = std::pow(lambda, 2 + c.order);
  auto dev = [&](const std::vector<double>& x, const std::vector<double>& y, double& num, double& den) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      num = std::max(num, std::abs(f * y[k] - x[k]));
      den = std::max(den, std::abs(x[k]));
    }
  };
  double num = 0.0, den = 0.0;
  if (std::holds_alternative<ScalarField>(a.field)) {
    dev(std::get<ScalarField>(a.field).data, std::get<ScalarField>(b.field).data, num, den);
  } else {
    const auto& u = std::get<VectorField>(a.field);
    const auto& v = std::get<VectorField>(b.field);
    dev(u.c1, v.c1, num, den);
    dev(u.c2, v.c2, num, den);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : kInf;
  return num / den;
}

inline std::vector<CheckReport> scaling_suite(const std::vector<ScalingCase>& cases, const std::vector<double>& lambdas,
                                              const std::vector<double>& times, const GridSpec& g,
                                              const ExpansionCoefficients& coeffs, const VerifyOptions& opt = {}) {
  std::vector<CheckReport> out;
  for (const auto& c : cases)
    for (double lam : lambdas) {
      double worst = 0.0;
      for (double t : times) worst = std::max(worst, scaling_deviation(c, t, lam, g, coeffs));
      const double tol = c.kind == TermKind::J ? opt.scaling_tol_quadrature : opt.scaling_tol_exact;
      CheckReport r;
      r.claim_tag = "scaling:" + to_string(c.kind) + "_" + std::to_string(c.order);
      r.mu = 0.0;
      r.measured_exponent = worst;
      r.expected_exponent = 0.0;
      r.verdict = worst <= tol ? Verdict::pass : Verdict::fail;
      std::ostringstream note;
      note << std::setprecision(3) << "lambda " << lam << ", max relative deviation " << worst << ", tol " << tol;
      r.notes = note.str();
      out.push_back(r);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Residual series on a trajectory

/// Fit width of the Gaussian carrying the low moments; kept narrow enough
/// that the fit is negligible at the box edge.
inline FreeSpaceOptions fit_options(double t, const GridSpec& g, const VerifyOptions& opt) {
  FreeSpaceOptions fo;
  fo.order = opt.free_space_order;
  fo.tau = std::min(t + opt.free_space_tau, g.L * g.L / 144.0);
  return fo;
}

/// Free-space velocity at a snapshot, and the same with a doubled fit width;
/// their difference measures the periodic-image error of the reconstruction.
struct VelocitySample {
  double t = 0.0;
  ScalarField omega;
  VectorField u, u_alt;
};

inline VelocitySample velocity_sample(const Snapshot& s, const VerifyOptions& opt) {
  VelocitySample v;
  v.t = s.t;
  v.omega = s.omega;
  FreeSpaceOptions fo = fit_options(s.t, s.omega.grid, opt);
  v.u = free_space_velocity(s.omega, fo);
  fo.tau *= 0.5;
  v.u_alt = free_space_velocity(s.omega, fo);
  return v;
}

inline std::vector<VelocitySample> window_samples(const Trajectory& tr, const VerifyOptions& opt) {
  const double T = tr.config.t_max;
  std::vector<VelocitySample> out;
  for (const auto& s : tr.snapshots)
    if (s.t >= T * opt.window_fraction * (1 - 1e-12)) out.push_back(velocity_sample(s, opt));
  if (out.size() < 6)
    throw DependencyError("fit window [" + std::to_string(T * opt.window_fraction) + ", " + std::to_string(T) +
                          "] holds " + std::to_string(out.size()) + " snapshots, need 6");
  return out;
}

struct ResidualSeries {
  std::vector<double> times;
  std::vector<VectorField> residual, noise;
};

/// The expansion terms at one time, grouped so that every variant is a sum.
struct TermBundle {
  VectorField u12, u34, j34;
};

inline VectorField variant_field(Variant v, double t, const GridSpec& g, const ExpansionCoefficients& c,
                                 const TermBundle& b) {
  const auto [bs, tt] = assembly_terms(v, t, c);
  VectorField out = b.u12;
  if (v == Variant::thm_st || v == Variant::thm_t) {
    out += b.u34;
    out += b.j34;
  }
  out += sample_tensor_terms(g, t, tt);
  return out;
}

/// Coefficient uncertainty of an assembly: quadrature-rule spread for the
/// finite-horizon coefficients, tail uncertainty for the infinite ones.
inline VectorField variant_noise(Variant v, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  std::vector<TensorTerm> terms;
  const int top = (v == Variant::prop_lowt || v == Variant::prop_lows) ? 2 : 4;
  const bool finite = v == Variant::prop_lows || v == Variant::thm_st;
  for (int m = 1; m <= top; ++m)
    for (const auto& ix : time_space_indices(m)) {
      if (m <= 2 && ix.l > 0) continue;
      const double nrm = taylor_norm(ix.l, ix.beta, m);
      Vec2 d{};
      if (finite) {
        const MomentTable& tab = c.table();
        for (int j = 0; j < 2; ++j)
          d[j] = tab.S(ix.l, ix.beta, j, t, TimeRule::cubic) - tab.S(ix.l, ix.beta, j, t, TimeRule::simpson);
      } else {
        d = c.inf_entry(ix.l, ix.beta).uncertainty;
      }
      terms.push_back({ix.l, ix.beta, {d[0] / nrm, d[1] / nrm}});
    }
  return sample_tensor_terms(g, t, terms);
}

inline std::vector<ResidualSeries> residual_series(const std::vector<Variant>& variants,
                                                   const std::vector<VelocitySample>& samples,
                                                   const ExpansionCoefficients& c) {
  std::vector<ResidualSeries> out(variants.size());
  for (const auto& s : samples) {
    const GridSpec& g = s.u.grid;
    TermBundle b;
    b.u12 = build_U(1, s.t, g, c);
    b.u12 += build_U(2, s.t, g, c);
    b.u34 = build_U(3, s.t, g, c);
    b.u34 += build_U(4, s.t, g, c);
    b.j34 = build_J(3, s.t, g, c);
    b.j34 += build_J(4, s.t, g, c);
    VectorField image = s.u;
    image -= s.u_alt;
    for (std::size_t k = 0; k < variants.size(); ++k) {
      out[k].times.push_back(s.t);
      out[k].residual.push_back(residual(s.u, variant_field(variants[k], s.t, g, c, b)));
      VectorField n = variant_noise(variants[k], s.t, g, c);
      for (std::size_t i = 0; i < n.c1.size(); ++i) {
        n.c1[i] = std::abs(n.c1[i]) + std::abs(image.c1[i]);
        n.c2[i] = std::abs(n.c2[i]) + std::abs(image.c2[i]);
      }
      out[k].noise.push_back(std::move(n));
    }
  }
  return out;
}

struct NormSeries {
  std::vector<double> values, noise;
};

inline NormSeries norms(const ResidualSeries& s, double mu, double q, const Region& region) {
  NormSeries n;
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    n.values.push_back(weighted_norm(s.residual[k], mu, q, region));
    n.noise.push_back(weighted_norm(s.noise[k], mu, q, region));
  }
  return n;
}

/// Least-squares slope of measured exponents against mu.
inline double mu_slope(const std::vector<CheckReport>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.measured_exponent)) continue;
    sx += r.mu;
    sy += r.measured_exponent;
    sxx += r.mu * r.mu;
    sxy += r.mu * r.measured_exponent;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double d = n * sxx - sx * sx;
  return d > 0 ? (n * sxy - sx * sy) / d : std::numeric_limits<double>::quiet_NaN();
}

/// Residual-rate claims of one assembly variant.
inline std::vector<CheckReport> theorem_suite(Variant v, const ResidualSeries& series, double L,
                                              const VerifyOptions& opt = {}) {
  const Region region = Region::disk(opt.region_fraction * L);
  const std::string tag = to_string(v);
  std::vector<CheckReport> out;
  auto add = [&](std::string t, double q, double mu, double expected, int lp, Gate gate, double tol) {
    const auto n = norms(series, mu, q, region);
    out.push_back(judge(std::move(t), q, mu, expected, lp, gate, tol, series.times, n.values, n.noise,
                        opt.noise_factor));
  };
  switch (v) {
    case Variant::prop_lowt:
      for (double q : {1.0, kInf}) {
        const Gate g = q == 1.0 ? Gate::reported : Gate::upper_bound;
        add(tag, q, 0.0, -gamma_exponent(q) - 1.0, 0, g, opt.tol_low_order);
        add(tag + ":weighted_data", q, 0.0, -gamma_exponent(q) - 1.5, 1, q == 1.0 ? Gate::reported : Gate::two_sided,
            opt.tol_exponent);
      }
      break;
    case Variant::prop_lows:
      for (double q : {1.0, kInf})
        add(tag, q, 0.0, -gamma_exponent(q) - 1.5, 1, q == 1.0 ? Gate::reported : Gate::upper_bound,
            opt.tol_exponent);
      break;
    case Variant::thm_st: {
      std::vector<CheckReport> inf_rows;
      for (double mu : opt.mus_inf) {
        add(tag, kInf, mu, -3.5 + 0.5 * mu, 2, Gate::upper_bound, opt.tol_exponent);
        inf_rows.push_back(out.back());
      }
      for (double mu : opt.mus_l1) add(tag, 1.0, mu, -2.5 + 0.5 * mu, 2, Gate::reported, opt.tol_exponent);
      CheckReport s;
      s.claim_tag = tag + ":mu_slope";
      s.expected_exponent = 0.5;
      s.measured_exponent = mu_slope(inf_rows);
      s.verdict = std::abs(s.measured_exponent - 0.5) <= opt.tol_slope ? Verdict::pass : Verdict::fail;
      s.notes = "slope of fitted exponent per unit mu, q=inf, tol " + std::to_string(opt.tol_slope);
      out.push_back(s);
      break;
    }
    case Variant::thm_t:
      for (double q : {1.0, 2.0, kInf}) {
        const Gate g = q == 1.0 ? Gate::reported : Gate::upper_bound;
        add(tag, q, 0.0, -gamma_exponent(q) - 2.0, 0, g, opt.tol_exponent);
        add(tag + ":weighted_data", q, 0.0, -gamma_exponent(q) - 2.5, 2, g, opt.tol_exponent);
      }
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vorticity

inline std::vector<CheckReport> vorticity_suite(const std::vector<VelocitySample>& samples,
                                                const ExpansionCoefficients& c, int k, const VerifyOptions& opt = {}) {
  if (samples.empty()) throw DependencyError("vorticity suite needs snapshots");
  const GridSpec& g = samples.front().omega.grid;
  const Region region = Region::disk(opt.region_fraction * g.L);
  std::vector<double> ts;
  std::vector<ScalarField> w, rest;
  std::vector<VectorField> flux_rest;
  for (const auto& s : samples) {
    ts.push_back(s.t);
    w.push_back(s.omega);
    ScalarField r = s.omega;
    const auto o2 = build_Omega(2, s.t, g, c), o3 = build_Omega(3, s.t, g, c);
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] -= o2.data[i] + o3.data[i];
    rest.push_back(std::move(r));
    VectorField f = pointwise_product(s.omega, s.u).flux;
    f -= build_I(5, s.t, g, c);
    f -= build_I(6, s.t, g, c);
    flux_rest.push_back(std::move(f));
  }
  auto series = [&](const auto& fields, double mu, double q) {
    std::vector<double> v;
    for (const auto& f : fields) v.push_back(weighted_norm(f, mu, q, region));
    return v;
  };
  std::vector<CheckReport> out;
  for (double q : {1.0, kInf}) {
    const double gq = gamma_exponent(q);
    const Gate gate = q == 1.0 ? Gate::reported : Gate::two_sided;
    out.push_back(judge("vorticity_decay", q, 0.0, -gq - 1.0, 0, gate, opt.tol_decay, ts, series(w, 0, q), {}, 0));
    const auto prof = judge("vorticity_profile", q, 0.0, -gq - 2.0, 1, q == 1.0 ? Gate::reported : Gate::upper_bound,
                            opt.tol_exponent, ts, series(rest, 0, q), {}, 0);
    out.push_back(prof);
    // without the profiles the residual is the vorticity itself
    const auto abl = judge("vorticity_profile:ablation", q, 0.0, -gq - 2.0, 1, Gate::reported, opt.tol_exponent, ts,
                           series(w, 0, q), {}, 0);
    CheckReport a = abl;
    a.verdict = abl.measured_exponent > prof.measured_exponent ? Verdict::pass : Verdict::fail;
    a.notes = "ablated exponent must exceed the full one; " + abl.notes;
    out.push_back(a);
    out.push_back(judge("vorticity_profile:weighted", q, k, -gq - 2.0 + 0.5 * k, 1,
                        q == 1.0 ? Gate::upper_bound : Gate::reported, opt.tol_exponent, ts,
                        series(rest, k, q), {}, 0));
    out.push_back(judge("flux_profile", q, k, -gq - 3.5 + 0.5 * k, 1, Gate::reported, opt.tol_exponent, ts,
                        series(flux_rest, k, q), {}, 0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear part

/// Velocity of the heat flow of omega0, reconstructed in free space.
inline VectorField linear_velocity(const ScalarField& omega0, double t, const VerifyOptions& opt = {}) {
  return free_space_velocity(heat_flow(omega0, t), fit_options(t, omega0.grid, opt));
}

inline std::vector<double> geometric_times(double t_max, double fraction, int count) {
  std::vector<double> ts;
  for (int k = 0; k < count; ++k) ts.push_back(t_max * fraction * std::pow(1.0 / fraction, double(k) / (count - 1)));
  return ts;
}

inline std::vector<CheckReport> lemma_suite(const ScalarField& omega0, const std::vector<double>& times,
                                            const VerifyOptions& opt = {}) {
  const GridSpec& g = omega0.grid;
  const Region region = Region::disk(opt.region_fraction * g.L);
  const auto c = ExpansionCoefficients::linear(moments_up_to(omega0, kInitialMomentOrder));
  std::vector<VectorField> rest, noise;
  for (double t : times) {
    VectorField u = linear_velocity(omega0, t, opt);
    FreeSpaceOptions alt = fit_options(t, g, opt);
    alt.tau *= 0.5;
    VectorField n = free_space_velocity(heat_flow(omega0, t), alt);
    n -= u;
    for (int m = 1; m <= 4; ++m) u -= build_U(m, t, g, c);
    rest.push_back(std::move(u));
    noise.push_back(std::move(n));
  }
  std::vector<CheckReport> out;
  for (double q : {1.0, 2.0, kInf}) {
    const double gq = gamma_exponent(q);
    for (double mu : opt.lemma_mus) {
      if (q != kInf && mu > 0) continue;
      std::vector<double> v, nz;
      for (std::size_t k = 0; k < times.size(); ++k) {
        v.push_back(weighted_norm(rest[k], mu, q, region));
        nz.push_back(weighted_norm(noise[k], mu, q, region));
      }
      const Gate gate = q == 1.0 ? Gate::reported : (q == kInf ? Gate::two_sided : Gate::upper_bound);
      out.push_back(judge("linear_part", q, mu, -gq - 2.5 + 0.5 * mu, 0, gate, opt.tol_decay, times, v, nz,
                          opt.noise_factor));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report output

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline void write_report_csv(const std::string& path, const std::vector<CheckReport>& rows) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "claim_tag,q,mu,expected_exponent,log_power,measured_exponent,r2,verdict,notes\n";
  for (const auto& r : rows)
    f << csv_quote(r.claim_tag) << ',' << format_number(r.q) << ',' << format_number(r.mu) << ','
      << format_number(r.expected_exponent) << ',' << r.log_power << ',' << format_number(r.measured_exponent) << ','
      << format_number(r.r2) << ',' << to_string(r.verdict) << ',' << csv_quote(r.notes) << '\n';
  if (!f) throw IoError("write failed: " + path);
}

inline std::string summary_text(const std::vector<CheckReport>& rows) {
  int counts[4] = {0, 0, 0, 0};
  std::ostringstream s;
  s << std::left;
  for (const auto& r : rows) {
    ++counts[static_cast<int>(r.verdict)];
    s << std::setw(14) << to_string(r.verdict) << std::setw(34) << r.claim_tag << " q=" << std::setw(4)
      << format_number(r.q) << " mu=" << std::setw(3) << format_number(r.mu) << " expected "
      << std::setw(8) << format_number(r.expected_exponent) << " measured " << std::setw(14)
      << format_number(r.measured_exponent) << " " << r.notes << '\n';
  }
  s << "pass " << counts[0] << ", fail " << counts[1] << ", inconclusive " << counts[2] << ", reported " << counts[3]
    << '\n';
  return s.str();
}

inline bool any_failed(const std::vector<CheckReport>& rows) {
  return std::any_of(rows.begin(), rows.end(), [](const CheckReport& r) { return r.verdict == Verdict::fail; });
}

} // namespace nsfar
