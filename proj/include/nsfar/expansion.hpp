#pragma once

// Asymptotic profiles of the velocity built from kernel derivatives and the
// moment table of a run.
//
//   U_m      = sum_{|a|=m+1} grad^a bs(t) m_a / a!                 (m_a = int (-y)^a w_0)
//   U_m^t    = sum d_t^l grad^b T(t) / (l! b!) * S_m(l, b; t)       (2l + |b| = m)
//   U_m^inf  = same kernels with the infinite-horizon coefficients
//   Omega_m  = curl(U_{m-1} + U_{m-1}^inf)
//   I_5      = Omega_2 (U_1 + U_1^inf),  I_6 = Omega_3 (U_1 + U_1^inf) + Omega_2 (U_2 + U_2^inf)
//   K_m, V_m = closed forms in the unit-time moments M_p[b] = int (-y)^b I_p(1, y) dy
//   J_m      = space-time Taylor remainder of T against I_p, evaluated per Fourier mode
//
// T = R^perp R G is the nonlinear kernel, u = bs * w_0 + int_0^t T(t-s) * (w u)(s) ds.
// For m = 3, 4 the coefficients S_m are renormalized: w u minus I_5(1+s)
// (order 3), minus I_5(s) + I_6(1+s) (order 4).  Their time integrals are
// power laws in s by the self-similarity of I_p, so the renormalizers are
// subtracted in closed form.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nsfar/errors.hpp"
#include "nsfar/fields.hpp"
#include "nsfar/kernel_fields.hpp"
#include "nsfar/kernels.hpp"
#include "nsfar/multi_index.hpp"
#include "nsfar/parallel.hpp"
#include "nsfar/quadrature.hpp"
#include "nsfar/solver.hpp"

namespace nsfar {

enum class TermKind { U, U_t, U_inf, Omega, I, K, J, V };

inline std::string to_string(TermKind k) {
  switch (k) {
    case TermKind::U: return "U";
    case TermKind::U_t: return "U_t";
    case TermKind::U_inf: return "U_inf";
    case TermKind::Omega: return "Omega";
    case TermKind::I: return "I";
    case TermKind::K: return "K";
    case TermKind::J: return "J";
    case TermKind::V: return "V";
  }
  return "?";
}

enum class Variant { prop_lowt, prop_lows, thm_st, thm_t };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::prop_lowt: return "prop_lowt";
    case Variant::prop_lows: return "prop_lows";
    case Variant::thm_st: return "thm_st";
    case Variant::thm_t: return "thm_t";
  }
  return "?";
}

struct ExpansionOptions {
  GridSpec profile_grid{128, 16.0, 2.0 / 3.0}; // unit-time profiles of I_5, I_6
  int fixed_point_iterations = 4;
  double tail_warning = 0.1;
  TimeRule rule = TimeRule::cubic;
  double j_eps_ratio = 1.0 / 64.0; // eps_0 = t * ratio
  int j_levels = 4;                // eps_0, eps_0/2, ... for the extrapolation
  int j_nodes = 8;                 // Gauss-Legendre nodes per dyadic s-panel
  double j_mode_cutoff = 80.0;     // skip modes with t |xi|^2 above this
};

/// A_l(t) = int_0^t s^l (1+s)^{-l-1} ds.
inline double renormalizer_integral(int l, double t) {
  if (t <= 0.0) return 0.0;
  double sum = 0.0;
  for (int k = 0; k <= l; ++k) {
    const double c = static_cast<double>(binomial(l, k)) * ((l - k) % 2 == 0 ? 1.0 : -1.0);
    if (k == l)
      sum += c * std::log1p(t);
    else
      sum += c * (std::pow(1.0 + t, k - l) - 1.0) / (k - l);
  }
  return sum;
}

/// lim_{S -> inf} (log S - A_l(S)).
inline double renormalizer_constant(int l) {
  double c = 0.0;
  for (int k = 0; k < l; ++k)
    c += static_cast<double>(binomial(l, k)) * ((l - k) % 2 == 0 ? 1.0 : -1.0) / (k - l);
  return c;
}

/// int_t^inf s^e ds; e < -1 required.
inline double power_tail(double e, double t) {
  if (e >= -1.0) throw DefinitionError("non-integrable power law s^" + std::to_string(e) + " in a tail integral");
  return std::pow(t, e + 1.0) / (-e - 1.0);
}

struct TailedCoefficient {
  Vec2 value{};       // coefficient used by U_m^inf
  Vec2 finite{};      // finite-horizon part at the horizon
  Vec2 tail{};        // modeled contribution of [horizon, inf)
  Vec2 uncertainty{}; // size of the next, unmodeled order
  bool warning = false;
};

using TsKey = std::pair<int, MultiIndex>;

class ExpansionCoefficients;
VectorField build_I(int p, double t, const GridSpec& g, const ExpansionCoefficients& c);

/// Moments, running integrals and infinite-horizon estimates feeding every profile.
class ExpansionCoefficients {
public:
  /// Linear part only: all nonlinear coefficients vanish.
  static ExpansionCoefficients linear(const std::vector<double>& initial, const ExpansionOptions& opt = {}) {
    ExpansionCoefficients c;
    c.opt_ = opt;
    c.table_.initial = initial;
    c.linear_ = true;
    c.m5_.assign(indices_up_to(4).size(), Vec2{});
    c.m6_ = c.m5_;
    for (int k = 1; k <= 4; ++k)
      for (const auto& ix : time_space_indices(k)) c.inf_[{ix.l, ix.beta}] = {};
    return c;
  }

  static ExpansionCoefficients from_table(const MomentTable& table, const ExpansionOptions& opt = {}) {
    if (table.times.size() < 2) throw DependencyError("moment table has no time history");
    ExpansionCoefficients c;
    c.opt_ = opt;
    c.table_ = table;
    c.horizon_ = table.t_end();
    c.m5_.assign(indices_up_to(4).size(), Vec2{});
    c.m6_ = c.m5_;
    c.cache_finite();
    // I_5, I_6 depend on S_inf of orders 1, 2 whose tails depend on I_5, I_6.
    for (int it = 0; it <= opt.fixed_point_iterations; ++it) {
      c.update_low_order();
      c.update_unit_moments();
    }
    c.update_low_order();
    c.update_high_order();
    return c;
  }

  const ExpansionOptions& options() const { return opt_; }
  bool is_linear() const { return linear_; }
  double horizon() const { return horizon_; }
  const MomentTable& table() const { return table_; }

  double m(const MultiIndex& a) const { return table_.initial_moment(a); }

  Vec2 m5(const MultiIndex& b) const { return at_moment(m5_, b); }
  Vec2 m6(const MultiIndex& b) const { return at_moment(m6_, b); }

  const TailedCoefficient& inf_entry(int l, const MultiIndex& b) const {
    auto it = inf_.find({l, b});
    if (it == inf_.end()) throw DependencyError("no infinite-horizon coefficient for l=" + std::to_string(l) + " " + b.str());
    return it->second;
  }
  Vec2 s_inf(int l, const MultiIndex& b) const { return inf_entry(l, b).value; }

  /// Finite-horizon coefficient of U_m^t, renormalized for orders 3 and 4.
  Vec2 s_t(int l, const MultiIndex& b, double t) const {
    if (linear_ || t <= 0.0) return {};
    const int k = 2 * l + b.order();
    Vec2 s = table_.S(l, b, t, opt_.rule);
    const double sg = l % 2 == 0 ? 1.0 : -1.0;
    if (k == 3) {
      const Vec2 q = m5(b);
      const double a = renormalizer_integral(l, t);
      for (int j = 0; j < 2; ++j) s[j] -= sg * q[j] * a;
    } else if (k == 4) {
      const Vec2 q5 = m5(b), q6 = m6(b);
      const double a = renormalizer_integral(l, t);
      for (int j = 0; j < 2; ++j) s[j] -= sg * (2.0 * std::sqrt(t) * q5[j] + a * q6[j]);
    }
    return s;
  }

  const std::map<TsKey, TailedCoefficient>& infinite() const { return inf_; }

private:
  static Vec2 at_moment(const std::vector<Vec2>& v, const MultiIndex& b) {
    if (b.order() > 4 || v.empty()) throw DependencyError("unit-time moment " + b.str() + " unavailable");
    return v[flat_index(b)];
  }

  void cache_finite() {
    const std::size_t last = table_.times.size() - 1;
    for (int k = 1; k <= 4; ++k)
      for (const auto& ix : time_space_indices(k)) {
        TsKey key{ix.l, ix.beta};
        finite_[key] = table_.S(ix.l, ix.beta, horizon_, opt_.rule);
        const double sg = ix.l % 2 == 0 ? 1.0 : -1.0;
        const double tl = std::pow(horizon_, ix.l);
        flux_end_[key] = {sg * tl * table_.flux_moment(last, ix.beta, 0), sg * tl * table_.flux_moment(last, ix.beta, 1)};
      }
  }

  /// Tail of int (-s)^l F_b(s) over [T, inf) with F_b ~ moments of I_5(s) + I_6(s).
  void fill(TsKey key, const Vec2& finite, const std::array<double, 2>& tail_coef5,
            const std::array<double, 2>& tail_coef6, int k) {
    const double T = horizon_;
    const double sg = key.first % 2 == 0 ? 1.0 : -1.0;
    TailedCoefficient e;
    e.finite = finite;
    const Vec2 q5 = m5(key.second), q6 = m6(key.second);
    const Vec2 measured = flux_end_.at(key);
    for (int j = 0; j < 2; ++j) {
      e.tail[j] = tail_coef5[j] * q5[j] + tail_coef6[j] * q6[j];
      e.value[j] = finite[j] + e.tail[j];
      const double model = sg * (q5[j] * std::pow(T, 0.5 * (k - 5)) + q6[j] * std::pow(T, 0.5 * (k - 6)));
      e.uncertainty[j] = std::abs(measured[j] - model) * T / (0.5 * (5 - k));
      if (std::abs(e.tail[j]) > opt_.tail_warning * std::abs(e.value[j]) && std::abs(e.value[j]) > 0.0)
        e.warning = true;
    }
    inf_[key] = e;
  }

  void update_low_order() {
    const double T = horizon_;
    for (int k = 1; k <= 2; ++k)
      for (const auto& ix : time_space_indices(k)) {
        TsKey key{ix.l, ix.beta};
        if (ix.l > 0) {
          // d_t T against int (w u) = 0
          TailedCoefficient e;
          e.finite = finite_.at(key);
          e.value = e.finite;
          inf_[key] = e;
          continue;
        }
        const double a5 = power_tail(0.5 * (k - 5), T), a6 = power_tail(0.5 * (k - 6), T);
        fill(key, finite_.at(key), {a5, a5}, {a6, a6}, k);
      }
  }

  void update_high_order() {
    const double T = horizon_;
    for (int k = 3; k <= 4; ++k)
      for (const auto& ix : time_space_indices(k)) {
        TsKey key{ix.l, ix.beta};
        const double sg = ix.l % 2 == 0 ? 1.0 : -1.0;
        const double log_part = renormalizer_constant(ix.l) - std::log(T) + renormalizer_integral(ix.l, T);
        const Vec2 renorm = s_t(ix.l, ix.beta, T);
        if (k == 3) {
          const double a6 = 2.0 / std::sqrt(T);
          fill(key, renorm, {sg * log_part, sg * log_part}, {sg * a6, sg * a6}, k);
        } else {
          fill(key, renorm, {0.0, 0.0}, {sg * log_part, sg * log_part}, k);
        }
      }
  }

  void update_unit_moments() {
    const GridSpec& pg = opt_.profile_grid;
    const VectorField i5 = build_I(5, 1.0, pg, *this);
    const VectorField i6 = build_I(6, 1.0, pg, *this);
    auto mom = [&](const VectorField& f) {
      const auto a = moments_separable(pg, f.c1.data(), 4);
      const auto b = moments_separable(pg, f.c2.data(), 4);
      std::vector<Vec2> out(a.size());
      for (std::size_t k = 0; k < a.size(); ++k) out[k] = {a[k], b[k]};
      return out;
    };
    m5_ = mom(i5);
    m6_ = mom(i6);
  }

  ExpansionOptions opt_;
  MomentTable table_;
  bool linear_ = false;
  double horizon_ = 0.0;
  std::vector<Vec2> m5_, m6_;
  std::map<TsKey, Vec2> finite_, flux_end_;
  std::map<TsKey, TailedCoefficient> inf_;
};

// ---------------------------------------------------------------------------
// Term lists

inline double taylor_norm(int l, const MultiIndex& b, int m) {
  return m >= 4 ? factorial(l) * b.factorial() : b.factorial();
}

inline std::vector<ScalarTerm> terms_U(int m, const ExpansionCoefficients& c) {
  if (m < 1 || m > 6) throw UnsupportedOrderError("U_m defined here for 1 <= m <= 6");
  std::vector<ScalarTerm> out;
  for (const auto& a : indices_of_order(m + 1)) out.push_back({a, c.m(a) / a.factorial()});
  return out;
}

inline void check_tensor_order(int m) {
  if (m < 1 || m > 4) throw UnsupportedOrderError("tensor profiles are defined for 1 <= m <= 4");
}

inline std::vector<TensorTerm> terms_U_t(int m, double t, const ExpansionCoefficients& c) {
  check_tensor_order(m);
  std::vector<TensorTerm> out;
  for (const auto& ix : time_space_indices(m)) {
    if (m <= 2 && ix.l > 0) continue;
    const Vec2 s = c.s_t(ix.l, ix.beta, t);
    const double nrm = taylor_norm(ix.l, ix.beta, m);
    out.push_back({ix.l, ix.beta, {s[0] / nrm, s[1] / nrm}});
  }
  return out;
}

inline std::vector<TensorTerm> terms_U_inf(int m, const ExpansionCoefficients& c) {
  check_tensor_order(m);
  std::vector<TensorTerm> out;
  for (const auto& ix : time_space_indices(m)) {
    if (m <= 2 && ix.l > 0) continue;
    const Vec2 s = c.s_inf(ix.l, ix.beta);
    const double nrm = taylor_norm(ix.l, ix.beta, m);
    out.push_back({ix.l, ix.beta, {s[0] / nrm, s[1] / nrm}});
  }
  return out;
}

inline std::vector<TensorTerm> terms_K(int m, double t, const ExpansionCoefficients& c) {
  if (m != 3 && m != 4) throw UnsupportedOrderError("K_m is defined for m = 3, 4");
  std::vector<TensorTerm> out;
  for (const auto& ix : time_space_indices(m)) {
    const Vec2 q = m == 3 ? c.m5(ix.beta) : c.m6(ix.beta);
    const double f = (ix.l % 2 == 0 ? 1.0 : -1.0) * renormalizer_integral(ix.l, t) / taylor_norm(ix.l, ix.beta, m);
    out.push_back({ix.l, ix.beta, {f * q[0], f * q[1]}});
  }
  return out;
}

inline std::vector<TensorTerm> terms_V(int m, double t, const ExpansionCoefficients& c) {
  if (m != 3 && m != 4) throw UnsupportedOrderError("V_m is defined for m = 3, 4");
  kernels::detail::check_time(t);
  std::vector<TensorTerm> out;
  const int p = m + 2;
  for (int k = 1; k <= (m == 3 ? 2 : 3); ++k)
    for (const auto& ix : time_space_indices(k)) {
      if (m == 3 && ix.l > 0) continue;
      const Vec2 q = m == 3 ? c.m5(ix.beta) : c.m6(ix.beta);
      const double e = 0.5 * (k - p);
      const double f = -(ix.l % 2 == 0 ? 1.0 : -1.0) * power_tail(e, t) / ix.beta.factorial();
      out.push_back({ix.l, ix.beta, {f * q[0], f * q[1]}});
    }
  return out;
}

inline std::vector<ScalarTerm> terms_Omega(int m, const ExpansionCoefficients& c) {
  if (m != 2 && m != 3) throw UnsupportedOrderError("Omega_m is defined for m = 2, 3");
  std::vector<ScalarTerm> out;
  for (const auto& a : indices_of_order(m)) out.push_back({a, c.m(a) / a.factorial()});
  for (const auto& b : indices_of_order(m - 1)) {
    const Vec2 s = c.s_inf(0, b);
    out.push_back({b + kE1, -s[0] / b.factorial()});
    out.push_back({b + kE2, -s[1] / b.factorial()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid profiles

inline VectorField build_U(int m, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  if (m > 4) throw UnsupportedOrderError("U_m profiles are built for 1 <= m <= 4");
  return sample_bs_terms(g, t, terms_U(m, c));
}

inline VectorField build_U_t(int m, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  return sample_tensor_terms(g, t, terms_U_t(m, t, c));
}

inline VectorField build_U_inf(int m, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  return sample_tensor_terms(g, t, terms_U_inf(m, c));
}

inline ScalarField build_Omega(int m, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  return sample_gauss_terms(g, t, terms_Omega(m, c));
}

inline VectorField build_K(int m, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  return sample_tensor_terms(g, t, terms_K(m, t, c));
}

inline VectorField build_V(int m, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  return sample_tensor_terms(g, t, terms_V(m, t, c));
}

inline VectorField multiply(const ScalarField& w, const VectorField& u) {
  return pointwise_product(w, u).flux;
}

inline VectorField build_I(int p, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  if (p != 5 && p != 6) throw UnsupportedOrderError("I_p is defined for p = 5, 6");
  std::vector<ScalarTerm> w1;
  auto low = [&](int m) {
    std::vector<TensorTerm> tt = terms_U_inf(m, c);
    VectorField u = sample_bs_terms(g, t, terms_U(m, c));
    u += sample_tensor_terms(g, t, tt);
    return u;
  };
  const VectorField v1 = low(1);
  VectorField out = multiply(build_Omega(p == 5 ? 2 : 3, t, g, c), v1);
  if (p == 6) out += multiply(build_Omega(2, t, g, c), low(2));
  out.time = t;
  return out;
}

// ---------------------------------------------------------------------------
// J_m

struct JResult {
  VectorField field;               // extrapolated eps -> 0
  std::vector<double> increments;  // ||J^{eps/2} - J^{eps}||_inf along the eps sequence
  double extrapolation_change = 0.0; // ||J_extrapolated - J^{eps_min}||_inf
};

namespace jdetail {

/// hat f(z) = int e^{-i z.y} f(y) dy on the lattice z = scale * dk * (k1, k2),
/// k1 in [0, k1max], k2 in {wave(j)} restricted to |k2| <= k2max.
struct LatticeTransform {
  int k1max = 0, k2max = 0;
  std::vector<int> rows; // target row indices j with |wave(j)| <= k2max
  std::vector<cplx> f1, f2; // [row][k1]

  void compute(const VectorField& prof, const GridSpec& target, double scale) {
    const GridSpec& pg = prof.grid;
    const int np = pg.n, nk1 = k1max + 1, nr = static_cast<int>(rows.size());
    const double dz = scale * target.dk(), h2 = pg.h() * pg.h();
    // phase tables
    std::vector<cplx> e1(static_cast<std::size_t>(np) * nk1);
    for (int i = 0; i < np; ++i)
      for (int k = 0; k < nk1; ++k) e1[static_cast<std::size_t>(i) * nk1 + k] = std::polar(1.0, -dz * k * pg.x(i));
    std::vector<cplx> r1(static_cast<std::size_t>(np) * nk1), r2(r1.size());
    parallel_for(0, np, [&](int j) {
      cplx* a = &r1[static_cast<std::size_t>(j) * nk1];
      cplx* b = &r2[static_cast<std::size_t>(j) * nk1];
      for (int i = 0; i < np; ++i) {
        const double v1 = prof.c1[static_cast<std::size_t>(j) * np + i];
        const double v2 = prof.c2[static_cast<std::size_t>(j) * np + i];
        if (v1 == 0.0 && v2 == 0.0) continue;
        const cplx* e = &e1[static_cast<std::size_t>(i) * nk1];
        for (int k = 0; k < nk1; ++k) {
          a[k] += v1 * e[k];
          b[k] += v2 * e[k];
        }
      }
    });
    f1.assign(static_cast<std::size_t>(nr) * nk1, cplx{});
    f2.assign(f1.size(), cplx{});
    parallel_for(0, nr, [&](int r) {
      const int k2 = target.wave(rows[r]);
      cplx* a = &f1[static_cast<std::size_t>(r) * nk1];
      cplx* b = &f2[static_cast<std::size_t>(r) * nk1];
      for (int j = 0; j < np; ++j) {
        const cplx ph = std::polar(h2, -dz * k2 * pg.x(j));
        const cplx* x = &r1[static_cast<std::size_t>(j) * nk1];
        const cplx* y = &r2[static_cast<std::size_t>(j) * nk1];
        for (int k = 0; k < nk1; ++k) {
          a[k] += ph * x[k];
          b[k] += ph * y[k];
        }
      }
    });
  }
};

} // namespace jdetail

/// J_m(t) on g.  The s-integral of the Taylor remainder is split into the
/// numerically integrated full kernel term over dyadic panels [eps, t] and the
/// closed-form integral of its Taylor polynomial; eps -> 0 by Richardson
/// extrapolation in powers of eps^{1/2}.
inline JResult build_J_detailed(int m, double t, const GridSpec& g, const ExpansionCoefficients& c,
                                const ExpansionOptions& opt) {
  if (m != 3 && m != 4) throw UnsupportedOrderError("J_m is defined for m = 3, 4");
  kernels::detail::check_time(t);
  g.validate();
  if (opt.j_levels < 3) throw ParameterError("J extrapolation needs at least 3 eps levels");
  const int p = m + 2;
  JResult res;
  res.field = VectorField(g, t);
  if (c.is_linear()) {
    res.increments.assign(opt.j_levels - 1, 0.0);
    return res;
  }
  const VectorField prof = build_I(p, 1.0, c.options().profile_grid, c);
  std::vector<Vec2> M;
  {
    const auto a = moments_separable(prof.grid, prof.c1.data(), m);
    const auto b = moments_separable(prof.grid, prof.c2.data(), m);
    for (std::size_t k = 0; k < a.size(); ++k) M.push_back({a[k], b[k]});
  }
  // Mode window.
  const double kc = std::sqrt(opt.j_mode_cutoff / t);
  jdetail::LatticeTransform lt;
  lt.k1max = std::min(g.n / 2 - 1, static_cast<int>(kc / g.dk()) + 1);
  lt.k2max = lt.k1max;
  for (int j = 0; j < g.n; ++j)
    if (std::abs(g.wave(j)) <= lt.k2max && std::abs(g.wave(j)) < g.n / 2) lt.rows.push_back(j);
  const int nk1 = lt.k1max + 1, nr = static_cast<int>(lt.rows.size());
  const std::size_t nmodes = static_cast<std::size_t>(nr) * nk1;

  // Panels: [t/2, t], [t/4, t/2], ..., down to eps_min.
  const double eps0 = opt.j_eps_ratio * t;
  const int levels = opt.j_levels;
  std::vector<double> eps(levels);
  for (int k = 0; k < levels; ++k) eps[k] = eps0 / std::pow(2.0, k);
  struct Panel { double a, b; int bucket; };
  std::vector<Panel> panels;
  {
    double b = t;
    while (b > eps0 * (1 + 1e-12)) {
      const double a = std::max(0.5 * b, eps0);
      panels.push_back({a, b, 0});
      b = a;
    }
    for (int k = 1; k < levels; ++k) panels.push_back({eps[k], eps[k - 1], k});
  }
  // bucket 0 accumulates [eps0, t]; bucket k the panel [eps_k, eps_{k-1}].
  std::vector<std::vector<cplx>> acc1(levels, std::vector<cplx>(nmodes)), acc2 = acc1;
  const auto& rule = quad::gauss_legendre(opt.j_nodes);
  std::vector<double> ksq(nmodes), x1(nmodes), x2(nmodes);
  for (int r = 0; r < nr; ++r)
    for (int k = 0; k < nk1; ++k) {
      const std::size_t idx = static_cast<std::size_t>(r) * nk1 + k;
      x1[idx] = g.dk() * k;
      x2[idx] = g.dk() * g.wave(lt.rows[r]);
      ksq[idx] = x1[idx] * x1[idx] + x2[idx] * x2[idx];
    }
  for (const auto& pn : panels) {
    const double mid = 0.5 * (pn.a + pn.b), half = 0.5 * (pn.b - pn.a);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double s = mid + half * rule.nodes[q];
      const double w = half * rule.weights[q] * std::pow(s, -0.5 * p);
      lt.compute(prof, g, std::sqrt(s));
      auto& a1 = acc1[pn.bucket];
      auto& a2 = acc2[pn.bucket];
      for (std::size_t i = 0; i < nmodes; ++i) {
        const double f = w * std::exp(-(t - s) * ksq[i]);
        a1[i] += f * lt.f1[i];
        a2[i] += f * lt.f2[i];
      }
    }
  }
  // Closed-form Taylor part: sum_{2l+|b| <= m} |xi|^{2l} (i xi)^b M_b / (l! b!) int_eps^t s^{(2l+|b|-p)/2} ds.
  auto taylor = [&](std::size_t i, double e_lo, int comp) {
    cplx sum{};
    for (int k = 0; k <= m; ++k)
      for (const auto& ix : time_space_indices(k)) {
        const double e = 0.5 * (k - p);
        const double integral = std::abs(e + 1.0) < 1e-12 ? std::log(t / e_lo)
                                                          : (std::pow(t, e + 1.0) - std::pow(e_lo, e + 1.0)) / (e + 1.0);
        cplx ib = std::pow(cplx(0.0, x1[i]), ix.beta.a1) * std::pow(cplx(0.0, x2[i]), ix.beta.a2);
        const double coef = std::pow(ksq[i], ix.l) / (factorial(ix.l) * ix.beta.factorial());
        sum += coef * ib * M[flat_index(ix.beta)][comp] * integral;
      }
    return sum;
  };
  // J^eps per level, applied kernel symbol A(xi) v = (xi2, -xi1) (xi.v) / |xi|^2.
  std::vector<std::vector<cplx>> j1(levels, std::vector<cplx>(nmodes)), j2 = j1;
  for (std::size_t i = 0; i < nmodes; ++i) {
    if (ksq[i] == 0.0) continue;
    const double decay = std::exp(-t * ksq[i]);
    cplx run1{}, run2{};
    for (int lv = 0; lv < levels; ++lv) {
      run1 += acc1[lv][i];
      run2 += acc2[lv][i];
      const cplx v1 = run1 - decay * taylor(i, eps[lv], 0);
      const cplx v2 = run2 - decay * taylor(i, eps[lv], 1);
      const cplx dot = (x1[i] * v1 + x2[i] * v2) / ksq[i];
      j1[lv][i] = x2[i] * dot;
      j2[lv][i] = -x1[i] * dot;
    }
  }
  // Richardson in eps^{1/2}, then eps, on the three finest levels.
  auto extrapolate = [&](const std::vector<std::vector<cplx>>& v) {
    const double r = std::sqrt(2.0);
    std::vector<cplx> out(nmodes);
    const int L = levels - 1;
    for (std::size_t i = 0; i < nmodes; ++i) {
      const cplx a = v[L - 2][i], b = v[L - 1][i], d = v[L][i];
      const cplx r1 = (r * b - a) / (r - 1.0), r2 = (r * d - b) / (r - 1.0);
      out[i] = 2.0 * r2 - r1;
    }
    return out;
  };
  auto to_field = [&](const std::vector<cplx>& h1, const std::vector<cplx>& h2) {
    SpectralField s1(g), s2(g);
    const double inv = 1.0 / (4.0 * g.L * g.L);
    for (int r = 0; r < nr; ++r)
      for (int k = 0; k < nk1; ++k) {
        const std::size_t src = static_cast<std::size_t>(r) * nk1 + k;
        const std::size_t dst = static_cast<std::size_t>(lt.rows[r]) * g.half() + k;
        const double sign = ((k + g.wave(lt.rows[r])) % 2 == 0) ? inv : -inv;
        s1.c[dst] = sign * h1[src];
        s2.c[dst] = sign * h2[src];
      }
    VectorField u(g, t);
    u.c1 = from_spectral(s1).data;
    u.c2 = from_spectral(s2).data;
    return u;
  };
  std::vector<VectorField> lev;
  for (int lv = 0; lv < levels; ++lv) lev.push_back(to_field(j1[lv], j2[lv]));
  for (int lv = 0; lv + 1 < levels; ++lv) {
    VectorField d = lev[lv + 1];
    d -= lev[lv];
    res.increments.push_back(weighted_norm(d, 0.0, INFINITY));
  }
  res.field = to_field(extrapolate(j1), extrapolate(j2));
  VectorField d = res.field;
  d -= lev.back();
  res.extrapolation_change = weighted_norm(d, 0.0, INFINITY);
  for (std::size_t k = 1; k < res.increments.size(); ++k)
    if (!(res.increments[k] < res.increments[k - 1]))
      throw IntegrationError("eps-extrapolation of J_" + std::to_string(m) + " does not converge: increments " +
                             std::to_string(res.increments[k - 1]) + " -> " + std::to_string(res.increments[k]));
  return res;
}

inline VectorField build_J(int m, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  return build_J_detailed(m, t, g, c, c.options()).field;
}

// ---------------------------------------------------------------------------
// Assembly

namespace assembly_detail {
inline void merge(std::vector<TensorTerm>& into, const std::vector<TensorTerm>& more, double sign = 1.0) {
  for (const auto& t : more) {
    auto it = std::find_if(into.begin(), into.end(), [&](const TensorTerm& o) { return o.l == t.l && o.beta == t.beta; });
    if (it == into.end()) {
      into.push_back({t.l, t.beta, {sign * t.coef[0], sign * t.coef[1]}});
    } else {
      it->coef[0] += sign * t.coef[0];
      it->coef[1] += sign * t.coef[1];
    }
  }
}
} // namespace assembly_detail

/// Kernel-term part of an assembly (everything except J_m).
inline std::pair<std::vector<ScalarTerm>, std::vector<TensorTerm>> assembly_terms(Variant v, double t,
                                                                                  const ExpansionCoefficients& c) {
  std::vector<ScalarTerm> bs;
  std::vector<TensorTerm> tt;
  const int top = (v == Variant::prop_lowt || v == Variant::prop_lows) ? 2 : 4;
  for (int m = 1; m <= top; ++m) {
    const auto u = terms_U(m, c);
    bs.insert(bs.end(), u.begin(), u.end());
    const bool use_t = v == Variant::prop_lows || v == Variant::thm_st;
    assembly_detail::merge(tt, use_t ? terms_U_t(m, t, c) : terms_U_inf(m, c));
  }
  if (top == 4) {
    for (int m = 3; m <= 4; ++m) {
      assembly_detail::merge(tt, terms_K(m, t, c));
      if (v == Variant::thm_t) assembly_detail::merge(tt, terms_V(m, t, c));
    }
  }
  return {bs, tt};
}

inline VectorField assemble(Variant v, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  const auto [bs, tt] = assembly_terms(v, t, c);
  VectorField out = sample_bs_terms(g, t, bs);
  out += sample_tensor_terms(g, t, tt);
  if (v == Variant::thm_st || v == Variant::thm_t) {
    out += build_J(3, t, g, c);
    out += build_J(4, t, g, c);
  }
  out.time = t;
  return out;
}

// ---------------------------------------------------------------------------
// Profile terms and tail bounds

struct ProfileTerm {
  TermKind kind = TermKind::U;
  int order = 1;
  double t = 1.0;
  std::variant<ScalarField, VectorField> field;
  double tail_uncertainty = 0.0; // sup-norm bound from infinite-horizon tails
};

/// sup |d_t^l grad^b T(1) e_j| on a fine grid around the origin.
inline double unit_kernel_sup(int l, const MultiIndex& b, int j) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int, int>, double> cache;
  const auto key = std::make_tuple(l, b.a1, b.a2, j);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  GridSpec g{128, 8.0, 2.0 / 3.0};
  Vec2 e{};
  e[j] = 1.0;
  const auto f = sample_tensor_terms(g, 1.0, {{l, b, e}});
  const double v = weighted_norm(f, 0.0, INFINITY);
  std::lock_guard lock(mu);
  cache[key] = v;
  return v;
}

/// sup-norm bound for the effect of the tail uncertainty of U_m^inf at time t.
inline double inf_uncertainty(int m, double t, const ExpansionCoefficients& c) {
  double sum = 0.0;
  for (const auto& ix : time_space_indices(m)) {
    if (m <= 2 && ix.l > 0) continue;
    const auto& e = c.inf_entry(ix.l, ix.beta);
    const double scale = std::pow(t, -0.5 * (2 + m)) / taylor_norm(ix.l, ix.beta, m);
    for (int j = 0; j < 2; ++j) sum += std::abs(e.uncertainty[j]) * scale * unit_kernel_sup(ix.l, ix.beta, j);
  }
  return sum;
}

inline ProfileTerm build_term(TermKind kind, int order, double t, const GridSpec& g, const ExpansionCoefficients& c) {
  ProfileTerm p;
  p.kind = kind;
  p.order = order;
  p.t = t;
  switch (kind) {
    case TermKind::U: p.field = build_U(order, t, g, c); break;
    case TermKind::U_t: p.field = build_U_t(order, t, g, c); break;
    case TermKind::U_inf:
      p.field = build_U_inf(order, t, g, c);
      p.tail_uncertainty = inf_uncertainty(order, t, c);
      break;
    case TermKind::Omega: p.field = build_Omega(order, t, g, c); break;
    case TermKind::I: p.field = build_I(order, t, g, c); break;
    case TermKind::K: p.field = build_K(order, t, g, c); break;
    case TermKind::J: p.field = build_J(order, t, g, c); break;
    case TermKind::V: p.field = build_V(order, t, g, c); break;
  }
  return p;
}

/// Every (kind, order) pair defined by the expansion.
inline std::vector<std::pair<TermKind, int>> all_term_kinds() {
  std::vector<std::pair<TermKind, int>> out;
  for (int m = 1; m <= 4; ++m) out.push_back({TermKind::U, m});
  for (int m = 1; m <= 4; ++m) out.push_back({TermKind::U_t, m});
  for (int m = 1; m <= 4; ++m) out.push_back({TermKind::U_inf, m});
  out.push_back({TermKind::Omega, 2});
  out.push_back({TermKind::Omega, 3});
  out.push_back({TermKind::I, 5});
  out.push_back({TermKind::I, 6});
  for (auto k : {TermKind::K, TermKind::J, TermKind::V}) {
    out.push_back({k, 3});
    out.push_back({k, 4});
  }
  return out;
}

} // namespace nsfar
