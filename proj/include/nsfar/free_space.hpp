#pragma once

// Whole-plane velocity of a box-sampled vorticity.  The periodic Biot-Savart
// law adds the field of the periodic images; images of a field whose moments
// vanish up to order K are O(L^{-K-3}).  So the low moments are carried by a
// Gaussian-derivative fit whose velocity is evaluated in closed form, and
// only the moment-free remainder goes through the periodic solver.

#include <vector>

#include "nsfar/fields.hpp"
#include "nsfar/kernel_fields.hpp"
#include "nsfar/multi_index.hpp"

namespace nsfar {

/// int y^beta G(tau, y) dy.
inline double gaussian_moment(const MultiIndex& b, double tau) {
  auto one = [&](int k) {
    if (k % 2 != 0) return 0.0;
    double df = 1.0;
    for (int i = k - 1; i > 1; i -= 2) df *= i;
    return std::pow(2.0 * tau, k / 2) * df;
  };
  return one(b.a1) * one(b.a2);
}

/// Coefficients c_alpha with int (-y)^beta sum_a c_a grad^a G(tau) = m_beta
/// for all |beta| <= K.  `moments` is in indices_up_to(K) order.
inline std::vector<ScalarTerm> hermite_fit(const std::vector<double>& moments, int K, double tau) {
  const auto idx = indices_up_to(K);
  if (moments.size() != idx.size()) throw ShapeError("moment vector length does not match order");
  std::vector<ScalarTerm> c;
  c.reserve(idx.size());
  for (const auto& b : idx) {
    double rhs = moments[flat_index(b)];
    for (const auto& prev : c) {
      const MultiIndex& a = prev.alpha;
      if (!b.dominates(a) || a == b) continue;
      const MultiIndex d = b - a;
      rhs -= prev.coef * b.factorial() / d.factorial() * gaussian_moment(d, tau);
    }
    c.push_back({b, rhs / b.factorial()});
  }
  return c;
}

struct FreeSpaceOptions {
  int order = 6;
  double tau = 1.0;
};

inline VectorField free_space_velocity(const ScalarField& omega, const FreeSpaceOptions& opt) {
  const auto terms = hermite_fit(moments_up_to(omega, opt.order), opt.order, opt.tau);
  ScalarField rest = omega;
  const ScalarField fit = sample_gauss_terms(omega.grid, opt.tau, terms);
  for (std::size_t k = 0; k < rest.data.size(); ++k) rest.data[k] -= fit.data[k];
  BiotSavartOptions bs;
  bs.mass_tolerance = 1e-10 * std::max(1.0, max_abs(omega.data));
  VectorField u = biot_savart_velocity(rest, bs);
  u += sample_bs_terms(omega.grid, opt.tau, terms);
  u.time = omega.time;
  return u;
}

} // namespace nsfar
