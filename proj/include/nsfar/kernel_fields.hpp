#pragma once

// Grid sampling of linear combinations of kernel derivatives.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "nsfar/grid.hpp"
#include "nsfar/kernels.hpp"
#include "nsfar/parallel.hpp"

namespace nsfar {

struct ScalarTerm {
  MultiIndex alpha;
  double coef = 0.0;
};

/// A tensor term d_t^l grad^beta T applied to a constant vector.
struct TensorTerm {
  int l = 0;
  MultiIndex beta;
  Vec2 coef{};
};

/// sum_a coef_a grad^a G(t) on the grid; separable Hermite evaluation.
inline ScalarField sample_gauss_terms(const GridSpec& g, double t, const std::vector<ScalarTerm>& terms) {
  kernels::detail::check_time(t);
  ScalarField out(g, t);
  const double s = std::sqrt(t);
  for (const auto& term : terms) {
    if (term.coef == 0.0) continue;
    std::vector<double> h1(g.n), h2(g.n);
    for (int i = 0; i < g.n; ++i) {
      h1[i] = kernels::detail::gauss_1d_deriv(term.alpha.a1, g.x(i) / s);
      h2[i] = kernels::detail::gauss_1d_deriv(term.alpha.a2, g.x(i) / s);
    }
    const double c = term.coef * std::pow(t, -0.5 * (2 + term.alpha.order())) / (4.0 * std::numbers::pi);
    for (int j = 0; j < g.n; ++j) {
      const double cj = c * h2[j];
      if (cj == 0.0) continue;
      for (int i = 0; i < g.n; ++i) out.at(i, j) += cj * h1[i];
    }
  }
  return out;
}

/// sum_a coef_a grad^a bs(t) on the grid.
inline VectorField sample_bs_terms(const GridSpec& g, double t, const std::vector<ScalarTerm>& terms) {
  kernels::detail::check_time(t);
  VectorField out(g, t);
  int order = 0;
  for (const auto& term : terms) order = std::max(order, term.alpha.order());
  if (terms.empty()) return out;
  const double s = std::sqrt(t);
  std::vector<double> scale(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k)
    scale[k] = terms[k].coef * std::pow(t, -0.5 * (1 + terms[k].alpha.order()));
  parallel_for(0, g.n, [&](int j) {
    for (int i = 0; i < g.n; ++i) {
      kernels::UnitPointEvaluator ev(g.x(i) / s, g.x(j) / s, order);
      double a = 0.0, b = 0.0;
      for (std::size_t k = 0; k < terms.size(); ++k) {
        if (scale[k] == 0.0) continue;
        const Vec2 v = ev.bs_deriv(terms[k].alpha);
        a += scale[k] * v[0];
        b += scale[k] * v[1];
      }
      const std::size_t idx = static_cast<std::size_t>(j) * g.n + i;
      out.c1[idx] = a;
      out.c2[idx] = b;
    }
  });
  return out;
}

/// sum_k (d_t^l grad^beta T)(t) coef_k on the grid.
inline VectorField sample_tensor_terms(const GridSpec& g, double t, const std::vector<TensorTerm>& terms) {
  kernels::detail::check_time(t);
  VectorField out(g, t);
  int order = 0;
  for (const auto& term : terms) order = std::max(order, 2 * term.l + term.beta.order());
  if (terms.empty()) return out;
  if (order > kernels::kMaxRieszOrder)
    throw UnsupportedOrderError("tensor term order above limit");
  const double s = std::sqrt(t);
  std::vector<double> scale(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k)
    scale[k] = std::pow(t, -0.5 * (2 + 2 * terms[k].l + terms[k].beta.order()));
  parallel_for(0, g.n, [&](int j) {
    for (int i = 0; i < g.n; ++i) {
      kernels::UnitPointEvaluator ev(g.x(i) / s, g.x(j) / s, order + 1);
      double a = 0.0, b = 0.0;
      for (std::size_t k = 0; k < terms.size(); ++k) {
        const auto& tm = terms[k];
        if (tm.coef[0] == 0.0 && tm.coef[1] == 0.0) continue;
        const Mat2 m = ev.riesz_deriv(tm.l, tm.beta);
        const Vec2 v = kernels::apply(m, tm.coef);
        a += scale[k] * v[0];
        b += scale[k] * v[1];
      }
      const std::size_t idx = static_cast<std::size_t>(j) * g.n + i;
      out.c1[idx] = a;
      out.c2[idx] = b;
    }
  });
  return out;
}

} // namespace nsfar
