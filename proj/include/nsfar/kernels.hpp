#pragma once

// Heat kernel G, the Oseen (Biot-Savart) kernel -grad^perp (-Lap)^{-1} G and
// the Riesz tensor R^perp R G, with all space/time derivatives.
//
// Conventions
//   G(t,x)  = (4 pi t)^{-1} exp(-|x|^2 / 4t)
//   bs(t,x) = -grad^perp (-Lap)^{-1} G = x^perp (1 - exp(-|x|^2/4t)) / (2 pi |x|^2)
//             with x^perp = (-x2, x1); the velocity of a unit Gaussian vortex.
//   T(t,x)  = R^perp R G, stored row-major as
//               [ -R2R1 G   -R2^2 G ]
//               [  R1^2 G    R1R2 G ]
//             so that (T * f)_i = sum_j T_ij * f_j.  Since T = grad^perp grad
//             (-Lap)^{-1} G we have T_ij = -d_j bs_i, which is how every
//             Riesz derivative is evaluated.
//
// Derivatives of the radial profile g(rho) = (1 - exp(-rho/4)) / (2 pi rho),
// rho = |x|^2, are expanded as  grad^alpha g = sum_k g^(k)(rho) P_{alpha,k}(x)
// with homogeneous integer polynomials P generated once by exact symbolic
// differentiation.  g^(k) is written through E_k(a) = int_0^1 s^k e^{-sa} ds,
// which is evaluated by a cancellation-free series (no 1/|x|^2 anywhere), so
// the kernels are smooth through x = 0.

#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "nsfar/errors.hpp"
#include "nsfar/multi_index.hpp"

namespace nsfar {

using Vec2 = std::array<double, 2>;
/// Row-major 2x2: {m00, m01, m10, m11}.
using Mat2 = std::array<double, 4>;

struct SpaceTimePoint {
  double t = 1.0;
  double x1 = 0.0;
  double x2 = 0.0;
};

enum class KernelRank { scalar = 1, vector2 = 2, tensor2x2 = 4 };

struct KernelValue {
  KernelRank rank = KernelRank::scalar;
  std::array<double, 4> entries{};

  int size() const { return static_cast<int>(rank); }
  double norm() const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += entries[i] * entries[i];
    return std::sqrt(s);
  }
  static KernelValue of(double v) { return {KernelRank::scalar, {v, 0, 0, 0}}; }
  static KernelValue of(const Vec2& v) {
    return {KernelRank::vector2, {v[0], v[1], 0, 0}};
  }
  static KernelValue of(const Mat2& m) { return {KernelRank::tensor2x2, m}; }
};

namespace kernels {

/// Highest derivative order of bs supported by the coefficient tables.
inline constexpr int kMaxBsOrder = 7;
/// Highest parabolic order 2l + |beta| supported for the Riesz tensor.
inline constexpr int kMaxRieszOrder = 6;
inline constexpr int kMaxGaussOrder = 24;

namespace detail {

inline void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw DomainError("kernel evaluated at non-positive time t=" +
                      std::to_string(t));
}

/// Homogeneous polynomial of degree d: sum_i c[i] x1^(d-i) x2^i.
struct HomPoly {
  int degree = 0;
  std::vector<std::int64_t> c;
};

struct RadialTerm {
  int k = 0; // derivative order of the radial profile
  HomPoly poly;
};

inline HomPoly times_x(const HomPoly& p, int j) {
  HomPoly out{p.degree + 1, std::vector<std::int64_t>(p.degree + 2, 0)};
  for (int i = 0; i <= p.degree; ++i) out.c[i + (j == 1 ? 1 : 0)] += p.c[i];
  return out;
}

inline bool derivative(const HomPoly& p, int j, HomPoly& out) {
  if (p.degree == 0) return false;
  out = HomPoly{p.degree - 1, std::vector<std::int64_t>(p.degree, 0)};
  bool nonzero = false;
  for (int i = 0; i <= p.degree; ++i) {
    if (j == 0) {
      if (i <= p.degree - 1) out.c[i] += (p.degree - i) * p.c[i];
    } else if (i >= 1) {
      out.c[i - 1] += i * p.c[i];
    }
  }
  for (auto v : out.c) nonzero = nonzero || v != 0;
  return nonzero;
}

inline void add_term(std::vector<RadialTerm>& terms, int k, const HomPoly& p) {
  for (auto& term : terms) {
    if (term.k == k) {
      for (std::size_t i = 0; i < p.c.size(); ++i) term.poly.c[i] += p.c[i];
      return;
    }
  }
  terms.push_back({k, p});
}

/// Table of grad^alpha h(|x|^2) = sum_k h^(k)(|x|^2) P_{alpha,k}(x) for
/// every |alpha| <= kMaxBsOrder, built by exact integer differentiation.
class RadialDerivativeTable {
public:
  static const RadialDerivativeTable& instance() {
    static const RadialDerivativeTable table;
    return table;
  }

  const std::vector<RadialTerm>& terms(const MultiIndex& a) const {
    return table_[flat_index(a)];
  }

private:
  RadialDerivativeTable() {
    const auto all = indices_up_to(kMaxBsOrder);
    table_.resize(all.size());
    table_[0] = {RadialTerm{0, HomPoly{0, {1}}}};
    for (const auto& a : all) {
      if (a.order() == 0) continue;
      const int j = a.a1 > 0 ? 0 : 1;
      const MultiIndex parent = j == 0 ? MultiIndex{a.a1 - 1, a.a2}
                                       : MultiIndex{a.a1, a.a2 - 1};
      std::vector<RadialTerm> next;
      for (const auto& term : table_[flat_index(parent)]) {
        // d_j [h^(k) P] = h^(k+1) 2 x_j P + h^(k) d_j P
        HomPoly lifted = times_x(term.poly, j);
        for (auto& v : lifted.c) v *= 2;
        add_term(next, term.k + 1, lifted);
        HomPoly dp;
        if (derivative(term.poly, j, dp)) add_term(next, term.k, dp);
      }
      table_[flat_index(a)] = std::move(next);
    }
  }

  std::vector<std::vector<RadialTerm>> table_;
};

/// E_k(a) = int_0^1 s^k exp(-s a) ds for k = 0..kmax, a >= 0.
inline void exp_moments(double a, int kmax, double* out) {
  const double ea = std::exp(-a);
  double top;
  if (a < 36.0) {
    // E_K = K! e^{-a} sum_j a^j / (K+1+j)!, all terms positive.
    double term = 1.0 / (kmax + 1);
    double sum = term;
    for (int j = 0; j < 400; ++j) {
      term *= a / (kmax + 2 + j);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    top = ea * sum;
  } else {
    double partial = 0.0, term = 1.0;
    for (int j = 0; j <= kmax; ++j) {
      partial += term;
      term *= a / (j + 1);
    }
    top = factorial(kmax) / std::pow(a, kmax + 1) * (1.0 - ea * partial);
  }
  out[kmax] = top;
  // Downward recurrence E_{k-1} = (a E_k + e^{-a}) / k is stable.
  for (int k = kmax; k >= 1; --k) out[k - 1] = (a * out[k] + ea) / k;
}

inline double hermite_phys(int n, double x) {
  double h0 = 1.0;
  if (n == 0) return h0;
  double h1 = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// d^n/dz^n exp(-z^2/4).
inline double gauss_1d_deriv(int n, double z) {
  return std::pow(-0.5, n) * hermite_phys(n, 0.5 * z) * std::exp(-0.25 * z * z);
}

} // namespace detail

/// Evaluates derivatives of the unit-time (t = 1) radial profile and of bs at
/// one point.  Reuse across many multi-indices at the same point: the
/// exponential moments are computed once in the constructor.
class UnitPointEvaluator {
public:
  UnitPointEvaluator(double z1, double z2, int max_order = kMaxBsOrder)
      : z1_(z1), z2_(z2), max_order_(max_order) {
    if (max_order > kMaxBsOrder)
      throw UnsupportedOrderError("bs derivative order " +
                                  std::to_string(max_order) +
                                  " above table limit " +
                                  std::to_string(kMaxBsOrder));
    const double rho = z1 * z1 + z2 * z2;
    detail::exp_moments(0.25 * rho, max_order, e_.data());
    // g^(k)(rho) = (1/8pi) (-1/4)^k E_k(rho/4)
    double scale = 1.0 / (8.0 * std::numbers::pi);
    for (int k = 0; k <= max_order; ++k) {
      gk_[k] = scale * e_[k];
      scale *= -0.25;
    }
    p1_[0] = p2_[0] = 1.0;
    for (int i = 1; i <= 2 * kMaxBsOrder + 1; ++i) {
      p1_[i] = p1_[i - 1] * z1;
      p2_[i] = p2_[i - 1] * z2;
    }
  }

  /// grad^alpha g at the point (t = 1).
  double g_deriv(const MultiIndex& a) const {
    if (a.order() > max_order_)
      throw UnsupportedOrderError("radial derivative order above evaluator limit");
    double acc = 0.0;
    for (const auto& term : detail::RadialDerivativeTable::instance().terms(a)) {
      const auto& p = term.poly;
      double v = 0.0;
      for (int i = 0; i <= p.degree; ++i)
        if (p.c[i] != 0) v += static_cast<double>(p.c[i]) * p1_[p.degree - i] * p2_[i];
      acc += gk_[term.k] * v;
    }
    return acc;
  }

  /// grad^alpha bs at the point (t = 1).
  Vec2 bs_deriv(const MultiIndex& a) const {
    // bs = (-x2 g, x1 g); grad^alpha (x_c g) = x_c grad^alpha g + a_c grad^{alpha-e_c} g
    const double ga = g_deriv(a);
    const double g_m1 = a.a1 > 0 ? g_deriv({a.a1 - 1, a.a2}) : 0.0;
    const double g_m2 = a.a2 > 0 ? g_deriv({a.a1, a.a2 - 1}) : 0.0;
    return {-(z2_ * ga + a.a2 * g_m2), z1_ * ga + a.a1 * g_m1};
  }

  /// d_t^l grad^beta T at the point (t = 1).
  Mat2 riesz_deriv(int l, const MultiIndex& beta) const {
    Mat2 out{};
    for (int k = 0; k <= l; ++k) {
      const double c = static_cast<double>(binomial(l, k));
      const MultiIndex lap{2 * k, 2 * (l - k)};
      for (int j = 0; j < 2; ++j) {
        const MultiIndex full = beta + lap + (j == 0 ? kE1 : kE2);
        const Vec2 b = bs_deriv(full);
        out[0 * 2 + j] -= c * b[0];
        out[1 * 2 + j] -= c * b[1];
      }
    }
    return out;
  }

private:
  double z1_, z2_;
  int max_order_;
  std::array<double, kMaxBsOrder + 1> e_{};
  std::array<double, kMaxBsOrder + 1> gk_{};
  std::array<double, 2 * kMaxBsOrder + 2> p1_{}, p2_{};
};

inline double gauss(const SpaceTimePoint& p) {
  detail::check_time(p.t);
  return std::exp(-(p.x1 * p.x1 + p.x2 * p.x2) / (4.0 * p.t)) /
         (4.0 * std::numbers::pi * p.t);
}

/// grad^alpha G via the Hermite recursion; separable in x1, x2.
inline double gauss_deriv(const MultiIndex& a, const SpaceTimePoint& p) {
  detail::check_time(p.t);
  if (a.order() > kMaxGaussOrder)
    throw UnsupportedOrderError("Gaussian derivative order above limit");
  const double s = std::sqrt(p.t);
  const double z1 = p.x1 / s, z2 = p.x2 / s;
  const double unit = detail::gauss_1d_deriv(a.a1, z1) *
                      detail::gauss_1d_deriv(a.a2, z2) / (4.0 * std::numbers::pi);
  return unit * std::pow(p.t, -0.5 * (2 + a.order()));
}

inline Vec2 bs_kernel_deriv(const MultiIndex& a, const SpaceTimePoint& p) {
  detail::check_time(p.t);
  if (a.order() > kMaxBsOrder)
    throw UnsupportedOrderError("bs derivative order " + std::to_string(a.order()) +
                                " above table limit " + std::to_string(kMaxBsOrder));
  const double s = std::sqrt(p.t);
  UnitPointEvaluator ev(p.x1 / s, p.x2 / s, a.order());
  const double scale = std::pow(p.t, -0.5 * (1 + a.order()));
  const Vec2 v = ev.bs_deriv(a);
  return {scale * v[0], scale * v[1]};
}

inline Vec2 bs_kernel(const SpaceTimePoint& p) { return bs_kernel_deriv({0, 0}, p); }

inline Mat2 riesz_tensor_deriv(int l, const MultiIndex& beta, const SpaceTimePoint& p) {
  detail::check_time(p.t);
  if (l < 0) throw DomainError("negative time-derivative order");
  const int order = 2 * l + beta.order();
  if (order > kMaxRieszOrder)
    throw UnsupportedOrderError("Riesz derivative order " + std::to_string(order) +
                                " above limit " + std::to_string(kMaxRieszOrder));
  const double s = std::sqrt(p.t);
  UnitPointEvaluator ev(p.x1 / s, p.x2 / s, order + 1);
  Mat2 m = ev.riesz_deriv(l, beta);
  const double scale = std::pow(p.t, -0.5 * (2 + order));
  for (auto& v : m) v *= scale;
  return m;
}

inline Mat2 riesz_tensor(const SpaceTimePoint& p) { return riesz_tensor_deriv(0, {0, 0}, p); }

inline Vec2 apply(const Mat2& m, const Vec2& v) {
  return {m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]};
}

} // namespace kernels
} // namespace nsfar
