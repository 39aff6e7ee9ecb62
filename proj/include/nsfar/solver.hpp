#pragma once

// Pseudo-spectral integration of  d_t w + u.grad w = Lap w  on the periodic
// box, u = periodic Biot-Savart velocity of w.  Diffusion is integrated
// exactly (integrating factor or exponential time differencing), advection
// explicitly with 2/3 dealiasing.  Every step node records the flux moments
// int (-y)^beta (w u)(s, y) dy, from which the moment table builds the time
// integrals S(l, beta; t).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "nsfar/errors.hpp"
#include "nsfar/fft.hpp"
#include "nsfar/fields.hpp"
#include "nsfar/grid.hpp"
#include "nsfar/kernels.hpp"
#include "nsfar/multi_index.hpp"
#include "nsfar/quadrature.hpp"

namespace nsfar {

enum class Stepper { imex_integrating_factor, etdrk4 };

struct SolverConfig {
  GridSpec grid;
  double dt = 0.05;         // step size after the initial ramp
  double dt_initial = 0.0;  // first step of the geometric ramp; 0 disables it
  double dt_growth = 1.05;
  double t_max = 16.0;
  std::vector<double> snapshot_times;
  Stepper stepper = Stepper::etdrk4;
  double cfl_limit = 0.5;
  double boundary_floor = 1e-12; // relative to max|w_0|
  bool enforce_window = true;    // t_max <= (L/8)^2
  bool nonlinear = true;
};

inline constexpr int kFluxOrder = 4;
inline constexpr int kInitialMomentOrder = 7;
inline constexpr int kFluxCount = (kFluxOrder + 1) * (kFluxOrder + 2) / 2;

struct StepDiagnostics {
  double t = 0.0;
  double omega_l1 = 0.0, omega_l2 = 0.0, omega_linf = 0.0;
  double u_l2 = 0.0, u_linf = 0.0;
  double cfl = 0.0;     // dt * max|u| / h for the step leaving this node
  double mean = 0.0;    // int w
  double flux_abs = 0.0;   // |int w u|
  double flux_scale = 0.0; // ||w||_2 ||u||_2
  double boundary = 0.0;   // max |w| on the box edge, undealiased state
};

enum class TimeRule { cubic, simpson, trapezoid };

/// int_a^b of the polynomial through (xs, ys).
inline double lagrange_integral(const double* xs, const double* ys, int count, double a, double b) {
  const auto& rule = quad::gauss_legendre(4);
  double sum = 0.0;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double s = mid + half * rule.nodes[q];
    double p = 0.0;
    for (int i = 0; i < count; ++i) {
      double li = 1.0;
      for (int j = 0; j < count; ++j)
        if (j != i) li *= (s - xs[j]) / (xs[i] - xs[j]);
      p += ys[i] * li;
    }
    sum += rule.weights[q] * p;
  }
  return half * sum;
}

/// Running integral of samples ys on nodes xs, one value per node.  Each
/// interval integrates the interpolant through 4 (cubic), 3 (simpson) or 2
/// neighbouring nodes; nonuniform spacing is allowed.
inline std::vector<double> running_integral(const std::vector<double>& xs, const std::vector<double>& ys,
                                            TimeRule rule) {
  const int n = static_cast<int>(xs.size());
  std::vector<double> out(n, 0.0);
  for (int k = 0; k + 1 < n; ++k) {
    double piece = 0.0;
    if (rule == TimeRule::trapezoid || n < 3) {
      piece = 0.5 * (xs[k + 1] - xs[k]) * (ys[k] + ys[k + 1]);
    } else {
      const int count = std::min(rule == TimeRule::cubic ? 4 : 3, n);
      const int start = std::clamp(rule == TimeRule::cubic ? k - 1 : k, 0, n - count);
      piece = lagrange_integral(&xs[start], &ys[start], count, xs[k], xs[k + 1]);
    }
    out[k + 1] = out[k] + piece;
  }
  return out;
}

/// Moments of the initial vorticity and of the flux w u along the step grid.
class MomentTable {
public:
  std::vector<double> initial; // m_alpha over indices_up_to(7)
  std::vector<double> times;   // step nodes, times[0] = 0
  std::vector<std::array<double, 2 * kFluxCount>> flux;

  double initial_moment(const MultiIndex& a) const {
    if (a.order() > kInitialMomentOrder || initial.empty())
      throw DependencyError("initial moment " + a.str() + " not recorded");
    return initial[flat_index(a)];
  }

  double flux_moment(std::size_t node, const MultiIndex& b, int comp) const {
    if (b.order() > kFluxOrder) throw DependencyError("flux moment order above recorded limit");
    return flux.at(node)[2 * flat_index(b) + comp];
  }

  std::size_t node_index(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12 * std::max(1.0, t));
    if (it == times.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, t))
      throw DependencyError("time " + std::to_string(t) + " is not a recorded step node");
    return static_cast<std::size_t>(it - times.begin());
  }

  /// S(l, beta; t_k) = int_0^{t_k} (-s)^l int (-y)^beta (w u)_comp at every node.
  std::vector<double> history(int l, const MultiIndex& b, int comp, TimeRule rule = TimeRule::cubic) const {
    if (2 * l + b.order() > kFluxOrder) throw DependencyError("S order above recorded limit");
    if (times.empty()) throw DependencyError("moment table has no step nodes");
    std::vector<double> ys(times.size());
    for (std::size_t k = 0; k < times.size(); ++k)
      ys[k] = std::pow(-times[k], l) * flux_moment(k, b, comp);
    return running_integral(times, ys, rule);
  }

  double S(int l, const MultiIndex& b, int comp, double t, TimeRule rule = TimeRule::cubic) const {
    if (t == 0.0) return 0.0;
    return history(l, b, comp, rule)[node_index(t)];
  }

  Vec2 S(int l, const MultiIndex& b, double t, TimeRule rule = TimeRule::cubic) const {
    return {S(l, b, 0, t, rule), S(l, b, 1, t, rule)};
  }

  double t_end() const { return times.empty() ? 0.0 : times.back(); }
};

/// int (-y)^beta f for all |beta| <= K, in indices_up_to(K) order.
inline std::vector<double> moments_separable(const GridSpec& g, const double* f, int K) {
  const int n = g.n;
  const double h2 = g.h() * g.h();
  std::vector<double> px(static_cast<std::size_t>(n) * (K + 1));
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int a = 0; a <= K; ++a) {
      px[static_cast<std::size_t>(i) * (K + 1) + a] = p;
      p *= -g.x(i);
    }
  }
  std::vector<double> acc((K + 1) * (K + 1), 0.0); // acc[a1*(K+1)+a2]
  std::vector<double> row(K + 1);
  for (int j = 0; j < n; ++j) {
    std::fill(row.begin(), row.end(), 0.0);
    const double* fr = f + static_cast<std::size_t>(j) * n;
    for (int i = 0; i < n; ++i) {
      const double v = fr[i];
      if (v == 0.0) continue;
      const double* p = &px[static_cast<std::size_t>(i) * (K + 1)];
      for (int a = 0; a <= K; ++a) row[a] += v * p[a];
    }
    const double* q = &px[static_cast<std::size_t>(j) * (K + 1)];
    for (int a1 = 0; a1 <= K; ++a1)
      for (int a2 = 0; a1 + a2 <= K; ++a2) acc[a1 * (K + 1) + a2] += row[a1] * q[a2];
  }
  std::vector<double> out;
  for (const auto& a : indices_up_to(K)) out.push_back(h2 * acc[a.a1 * (K + 1) + a.a2]);
  return out;
}

struct Snapshot {
  double t = 0.0;
  ScalarField omega;
};

struct Trajectory {
  SolverConfig config;
  ScalarField omega0;
  std::vector<Snapshot> snapshots;
  MomentTable moments;
  std::vector<StepDiagnostics> diagnostics;

  const Snapshot& at(double t) const {
    for (const auto& s : snapshots)
      if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, t)) return s;
    throw DependencyError("no snapshot at t = " + std::to_string(t));
  }
  std::vector<double> snapshot_times() const {
    std::vector<double> ts;
    for (const auto& s : snapshots) ts.push_back(s.t);
    return ts;
  }
};

/// Physical-space quantities of one nonlinear evaluation.
struct Probe {
  std::vector<double> omega, u1, u2, f1, f2;
};

class VorticityIntegrator {
public:
  explicit VorticityIntegrator(const SolverConfig& cfg) : cfg_(cfg), g_(cfg.grid) {
    g_.validate();
    const std::size_t m = g_.spectral_size();
    k1_.resize(m);
    k2_.resize(m);
    ksq_.resize(m);
    mask_.resize(m);
    const double dk = g_.dk();
    const double cut = g_.dealias_fraction * (g_.n / 2);
    for_each_mode(g_, [&](std::size_t idx, int a, int b) {
      k1_[idx] = dk * a;
      k2_[idx] = dk * b;
      ksq_[idx] = k1_[idx] * k1_[idx] + k2_[idx] * k2_[idx];
      const bool keep = !is_nyquist(g_, a, b) && std::abs(a) < cut && std::abs(b) < cut;
      mask_[idx] = keep ? 1.0 : 0.0;
    });
    const std::size_t s = g_.size();
    work_.resize(m);
    wa_.resize(m);
    wb_.resize(m);
    probe_.omega.resize(s);
    probe_.u1.resize(s);
    probe_.u2.resize(s);
    probe_.f1.resize(s);
    probe_.f2.resize(s);
  }

  const GridSpec& grid() const { return g_; }

  /// N(w) = -div(w u) with dealiasing; fills probe_ with physical fields.
  void nonlinear(const std::vector<cplx>& w, std::vector<cplx>& out) {
    const auto& plan = fft::plan(g_.n);
    const std::size_t m = w.size();
    for (std::size_t k = 0; k < m; ++k) work_[k] = mask_[k] * w[k];
    for (std::size_t k = 0; k < m; ++k) {
      const double q = ksq_[k];
      wa_[k] = q > 0.0 ? cplx(0.0, k2_[k] / q) * work_[k] : cplx{};
      wb_[k] = q > 0.0 ? cplx(0.0, -k1_[k] / q) * work_[k] : cplx{};
    }
    plan.backward(work_.data(), probe_.omega.data());
    plan.backward(wa_.data(), probe_.u1.data());
    plan.backward(wb_.data(), probe_.u2.data());
    const std::size_t s = g_.size();
    for (std::size_t k = 0; k < s; ++k) {
      probe_.f1[k] = probe_.omega[k] * probe_.u1[k];
      probe_.f2[k] = probe_.omega[k] * probe_.u2[k];
    }
    out.resize(m);
    if (!cfg_.nonlinear) {
      std::fill(out.begin(), out.end(), cplx{});
      return;
    }
    plan.forward(probe_.f1.data(), wa_.data());
    plan.forward(probe_.f2.data(), wb_.data());
    const double inv = 1.0 / static_cast<double>(s);
    for (std::size_t k = 0; k < m; ++k)
      out[k] = -mask_[k] * inv * cplx(0.0, 1.0) * (k1_[k] * wa_[k] + k2_[k] * wb_[k]);
  }

  const Probe& probe() const { return probe_; }

  /// Advances w by h; n1 must be N(w) at the input state.
  void step(std::vector<cplx>& w, double h, const std::vector<cplx>& n1) {
    const Coeffs& c = coeffs(h);
    const std::size_t m = w.size();
    std::vector<cplx> a(m), b(m), cc(m), na(m), nb(m), nc(m);
    if (cfg_.stepper == Stepper::imex_integrating_factor) {
      for (std::size_t k = 0; k < m; ++k) a[k] = c.e2[k] * (w[k] + 0.5 * h * n1[k]);
      nonlinear(a, na);
      for (std::size_t k = 0; k < m; ++k) b[k] = c.e2[k] * w[k] + 0.5 * h * na[k];
      nonlinear(b, nb);
      for (std::size_t k = 0; k < m; ++k) cc[k] = c.e[k] * w[k] + h * c.e2[k] * nb[k];
      nonlinear(cc, nc);
      for (std::size_t k = 0; k < m; ++k)
        w[k] = c.e[k] * w[k] + h / 6.0 * (c.e[k] * n1[k] + 2.0 * c.e2[k] * (na[k] + nb[k]) + nc[k]);
    } else {
      for (std::size_t k = 0; k < m; ++k) a[k] = c.e2[k] * w[k] + c.q[k] * n1[k];
      nonlinear(a, na);
      for (std::size_t k = 0; k < m; ++k) b[k] = c.e2[k] * w[k] + c.q[k] * na[k];
      nonlinear(b, nb);
      for (std::size_t k = 0; k < m; ++k) cc[k] = c.e2[k] * a[k] + c.q[k] * (2.0 * nb[k] - n1[k]);
      nonlinear(cc, nc);
      for (std::size_t k = 0; k < m; ++k)
        w[k] = c.e[k] * w[k] + c.f1[k] * n1[k] + 2.0 * c.f2[k] * (na[k] + nb[k]) + c.f3[k] * nc[k];
    }
  }

private:
  struct Coeffs {
    std::vector<double> e, e2, q, f1, f2, f3;
  };

  const Coeffs& coeffs(double h) {
    auto it = cache_.find(h);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 8) cache_.clear();
    Coeffs c;
    const std::size_t m = ksq_.size();
    c.e.resize(m);
    c.e2.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      c.e[k] = std::exp(-ksq_[k] * h);
      c.e2[k] = std::exp(-0.5 * ksq_[k] * h);
    }
    if (cfg_.stepper == Stepper::etdrk4) {
      // phi-type coefficients by contour averaging around z = -|k|^2 h.
      constexpr int M = 32;
      std::array<cplx, M> roots;
      for (int j = 0; j < M; ++j)
        roots[j] = std::exp(cplx(0.0, std::numbers::pi * (j + 0.5) / M));
      c.q.resize(m);
      c.f1.resize(m);
      c.f2.resize(m);
      c.f3.resize(m);
      for (std::size_t k = 0; k < m; ++k) {
        const double z = -ksq_[k] * h;
        cplx sq{}, s1{}, s2{}, s3{};
        for (int j = 0; j < M; ++j) {
          // conjugate pairs give the real part; use the upper half circle twice
          const cplx r = z + roots[j];
          const cplx er = std::exp(r), er2 = std::exp(0.5 * r);
          sq += (er2 - 1.0) / r;
          s1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / (r * r * r);
          s2 += (2.0 + r + er * (r - 2.0)) / (r * r * r);
          s3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / (r * r * r);
        }
        c.q[k] = h * sq.real() / M;
        c.f1[k] = h * s1.real() / M;
        c.f2[k] = h * s2.real() / M;
        c.f3[k] = h * s3.real() / M;
      }
    }
    return cache_.emplace(h, std::move(c)).first->second;
  }

  SolverConfig cfg_;
  GridSpec g_;
  std::vector<double> k1_, k2_, ksq_, mask_;
  std::vector<cplx> work_, wa_, wb_;
  Probe probe_;
  std::map<double, Coeffs> cache_;
};

namespace solver_detail {

inline double edge_max(const GridSpec& g, const std::vector<double>& w) {
  double m = 0.0;
  for (int i = 0; i < g.n; ++i) {
    m = std::max(m, std::abs(w[i]));                                  // x2 = -L
    m = std::max(m, std::abs(w[static_cast<std::size_t>(i) * g.n])); // x1 = -L
  }
  return m;
}

inline StepDiagnostics diagnose(const GridSpec& g, double t, const Probe& p) {
  StepDiagnostics d;
  d.t = t;
  const double h2 = g.h() * g.h();
  double f1 = 0.0, f2 = 0.0, u2sum = 0.0, umax = 0.0;
  for (std::size_t k = 0; k < p.omega.size(); ++k) {
    const double w = p.omega[k];
    d.omega_l1 += std::abs(w);
    d.omega_l2 += w * w;
    d.omega_linf = std::max(d.omega_linf, std::abs(w));
    d.mean += w;
    const double uu = p.u1[k] * p.u1[k] + p.u2[k] * p.u2[k];
    u2sum += uu;
    umax = std::max(umax, uu);
    f1 += p.f1[k];
    f2 += p.f2[k];
  }
  d.omega_l1 *= h2;
  d.omega_l2 = std::sqrt(d.omega_l2 * h2);
  d.mean *= h2;
  d.u_l2 = std::sqrt(u2sum * h2);
  d.u_linf = std::sqrt(umax);
  d.flux_abs = std::hypot(f1, f2) * h2;
  d.flux_scale = d.omega_l2 * d.u_l2;
  return d;
}

} // namespace solver_detail

/// One step from spectral state w at time t; returns the advanced state.
inline std::vector<cplx> step(const std::vector<cplx>& w, double h, const SolverConfig& cfg) {
  VorticityIntegrator integ(cfg);
  std::vector<cplx> out = w, n1;
  integ.nonlinear(out, n1);
  const double umax = solver_detail::diagnose(cfg.grid, 0.0, integ.probe()).u_linf;
  if (umax > 0.0 && h > cfg.cfl_limit * cfg.grid.h() / umax)
    throw CflError("time step violates the advective CFL bound", 0.9 * cfg.cfl_limit * cfg.grid.h() / umax);
  integ.step(out, h, n1);
  return out;
}

inline void validate(const SolverConfig& cfg) {
  cfg.grid.validate();
  if (!(cfg.dt > 0.0)) throw ParameterError("dt must be positive");
  if (cfg.dt_initial < 0.0 || cfg.dt_initial > cfg.dt) throw ParameterError("dt_initial must lie in [0, dt]");
  if (!(cfg.dt_growth > 1.0)) throw ParameterError("dt_growth must exceed 1");
  if (!(cfg.t_max > 0.0)) throw ParameterError("t_max must be positive");
  if (!(cfg.cfl_limit > 0.0)) throw ParameterError("cfl_limit must be positive");
  if (cfg.enforce_window && cfg.t_max > std::pow(cfg.grid.L / 8.0, 2) * (1.0 + 1e-12))
    throw ParameterError("t_max exceeds the validity window (L/8)^2 = " +
                         std::to_string(std::pow(cfg.grid.L / 8.0, 2)));
  for (std::size_t k = 0; k < cfg.snapshot_times.size(); ++k) {
    const double s = cfg.snapshot_times[k];
    if (s < 0.0 || s > cfg.t_max * (1.0 + 1e-12)) throw ParameterError("snapshot time outside [0, t_max]");
    if (k > 0 && !(s > cfg.snapshot_times[k - 1])) throw ParameterError("snapshot times must increase strictly");
  }
}

inline Trajectory run(const ScalarField& omega0, const SolverConfig& cfg) {
  validate(cfg);
  require_same_grid(omega0.grid, cfg.grid);
  Trajectory traj;
  traj.config = cfg;
  traj.omega0 = omega0;
  traj.omega0.time = 0.0;
  traj.moments.initial = moments_up_to(omega0, kInitialMomentOrder);

  const GridSpec& g = cfg.grid;
  const double peak0 = max_abs(omega0.data);
  const double floor = cfg.boundary_floor * peak0;
  VorticityIntegrator integ(cfg);
  std::vector<cplx> w = to_spectral(omega0).c, n1;

  std::size_t next_snap = 0;
  const double tol = 1e-12 * std::max(1.0, cfg.t_max);
  auto take_snapshot = [&](double t) {
    while (next_snap < cfg.snapshot_times.size() && std::abs(cfg.snapshot_times[next_snap] - t) <= tol) {
      SpectralField s(g);
      s.c = w;
      traj.snapshots.push_back({t, from_spectral(s, t)});
      ++next_snap;
    }
  };

  auto record = [&](double t, double h) {
    integ.nonlinear(w, n1);
    const Probe& p = integ.probe();
    StepDiagnostics d = solver_detail::diagnose(g, t, p);
    SpectralField state(g);
    state.c = w;
    d.boundary = solver_detail::edge_max(g, from_spectral(state).data);
    if (d.boundary > floor && peak0 > 0.0)
      throw TruncationError("vorticity at the box edge exceeds the boundary floor", t);
    if (h > 0.0 && d.u_linf > 0.0) {
      d.cfl = h * d.u_linf / g.h();
      if (d.cfl > cfg.cfl_limit)
        throw CflError("time step violates the advective CFL bound at t = " + std::to_string(t),
                       0.9 * cfg.cfl_limit * g.h() / d.u_linf);
    }
    traj.diagnostics.push_back(d);
    traj.moments.times.push_back(t);
    const auto m1 = moments_separable(g, p.f1.data(), kFluxOrder);
    const auto m2 = moments_separable(g, p.f2.data(), kFluxOrder);
    std::array<double, 2 * kFluxCount> row{};
    for (int k = 0; k < kFluxCount; ++k) {
      row[2 * k] = m1[k];
      row[2 * k + 1] = m2[k];
    }
    traj.moments.flux.push_back(row);
  };

  double t = 0.0, h_ramp = cfg.dt_initial > 0.0 ? cfg.dt_initial : cfg.dt;
  take_snapshot(0.0);
  while (t < cfg.t_max - tol) {
    double h = std::min(h_ramp, cfg.dt);
    double target = cfg.t_max;
    if (next_snap < cfg.snapshot_times.size()) target = std::min(target, cfg.snapshot_times[next_snap]);
    if (t + h > target - 1e-9 * h) h = target - t;
    record(t, h);
    integ.step(w, h, n1);
    t = (std::abs(t + h - target) <= tol) ? target : t + h;
    h_ramp *= cfg.dt_growth;
    take_snapshot(t);
  }
  record(t, 0.0);
  return traj;
}

} // namespace nsfar
