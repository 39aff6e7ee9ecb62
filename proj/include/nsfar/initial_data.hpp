#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nsfar/errors.hpp"
#include "nsfar/fields.hpp"
#include "nsfar/grid.hpp"
#include "nsfar/kernel_fields.hpp"
#include "nsfar/multi_index.hpp"

namespace nsfar {

enum class InitialShape { laplacian_gaussian, curl_of_compact_bump, custom_samples };

/// Polynomial 1 + sum c_a x^a multiplying the stream-function envelope.
struct Modulation {
  std::vector<ScalarTerm> terms;
};

/// Second-order operator h20 d11 + h11 d12 + h02 d22; the default is the Laplacian.
/// Any choice keeps the moments of order <= 1 zero; h20 != h02 or h11 != 0
/// makes the second moments anisotropic.
struct HessianWeights {
  double h20 = 1.0, h11 = 0.0, h02 = 1.0;
};

struct InitialDataSpec {
  double amplitude = 0.1; // target max |omega_0| on the grid
  double width = 1.0;     // sigma
  InitialShape shape = InitialShape::laplacian_gaussian;
  Modulation modulation;
  HessianWeights hessian;
  std::optional<ScalarField> samples; // for custom_samples
  double moment_tolerance = 1e-10;
};

namespace initial_detail {

struct PolyEval {
  double p = 0.0, p1 = 0.0, p2 = 0.0, lap = 0.0; // P, dP/dx1, dP/dx2, Lap P
  double p11 = 0.0, p12 = 0.0, p22 = 0.0;
};

inline double ipow(double x, int k) { return k <= 0 ? 1.0 : std::pow(x, k); }

inline PolyEval eval(const Modulation& m, double x1, double x2) {
  PolyEval e;
  e.p = 1.0;
  for (const auto& t : m.terms) {
    const int a = t.alpha.a1, b = t.alpha.a2;
    e.p += t.coef * ipow(x1, a) * ipow(x2, b);
    if (a >= 1) e.p1 += t.coef * a * ipow(x1, a - 1) * ipow(x2, b);
    if (b >= 1) e.p2 += t.coef * b * ipow(x1, a) * ipow(x2, b - 1);
    if (a >= 2) e.p11 += t.coef * a * (a - 1) * ipow(x1, a - 2) * ipow(x2, b);
    if (b >= 2) e.p22 += t.coef * b * (b - 1) * ipow(x1, a) * ipow(x2, b - 2);
    if (a >= 1 && b >= 1) e.p12 += t.coef * a * b * ipow(x1, a - 1) * ipow(x2, b - 1);
  }
  e.lap = e.p11 + e.p22;
  return e;
}

/// Envelope value, gradient and Hessian at one point.
struct EnvelopeEval {
  double b = 0.0, b1 = 0.0, b2 = 0.0, b11 = 0.0, b12 = 0.0, b22 = 0.0;
};

/// (h20 d11 + h11 d12 + h02 d22)[P B] by the product rule.
inline double weighted_hessian(const HessianWeights& h, const PolyEval& e, const EnvelopeEval& v) {
  const double d11 = e.p11 * v.b + 2.0 * e.p1 * v.b1 + e.p * v.b11;
  const double d22 = e.p22 * v.b + 2.0 * e.p2 * v.b2 + e.p * v.b22;
  const double d12 = e.p12 * v.b + e.p1 * v.b2 + e.p2 * v.b1 + e.p * v.b12;
  return h.h20 * d11 + h.h11 * d12 + h.h02 * d22;
}

/// Envelope of the form f(|x|^2) given f, f', f''.
inline EnvelopeEval radial_envelope(double x1, double x2, double f, double df, double d2f) {
  EnvelopeEval v;
  v.b = f;
  v.b1 = 2.0 * x1 * df;
  v.b2 = 2.0 * x2 * df;
  v.b11 = 4.0 * x1 * x1 * d2f + 2.0 * df;
  v.b22 = 4.0 * x2 * x2 * d2f + 2.0 * df;
  v.b12 = 4.0 * x1 * x2 * d2f;
  return v;
}

/// H[P exp(-r^2/s^2)] for the weighted Hessian H.
inline double hessian_gaussian(const Modulation& m, const HessianWeights& h, double s, double x1, double x2) {
  const double s2 = s * s;
  const double f = std::exp(-(x1 * x1 + x2 * x2) / s2);
  return weighted_hessian(h, eval(m, x1, x2), radial_envelope(x1, x2, f, -f / s2, f / (s2 * s2)));
}

/// H[P b(|x|^2/R^2)] with the compactly supported bump b(s) = exp(-4s/(1-s)).
inline double hessian_bump(const Modulation& m, const HessianWeights& h, double R, double x1, double x2) {
  constexpr double c = 4.0;
  const double R2 = R * R, s = (x1 * x1 + x2 * x2) / R2;
  if (s >= 1.0) return 0.0;
  const double q = 1.0 - s;
  const double b = std::exp(-c * s / q);
  const double d1 = -c / (q * q), d2 = -2.0 * c / (q * q * q);
  // chain rule from s = r^2 / R^2 to r^2
  const double df = b * d1 / R2, d2f = b * (d1 * d1 + d2) / (R2 * R2);
  return weighted_hessian(h, eval(m, x1, x2), radial_envelope(x1, x2, b, df, d2f));
}

/// Lap[P exp(-r^2/s^2)] in closed form.
inline double laplacian_gaussian(const Modulation& m, double s, double x1, double x2) {
  const PolyEval e = eval(m, x1, x2);
  const double r2 = x1 * x1 + x2 * x2, s2 = s * s;
  return (e.lap - 4.0 / s2 * (x1 * e.p1 + x2 * e.p2) + e.p * (4.0 * r2 / (s2 * s2) - 4.0 / s2)) *
         std::exp(-r2 / s2);
}

/// Lap[P b(|x|^2/R^2)] with the compactly supported bump b(s) = exp(-4s/(1-s)).
inline double laplacian_bump(const Modulation& m, double R, double x1, double x2) {
  constexpr double c = 4.0;
  const double R2 = R * R, r2 = x1 * x1 + x2 * x2, s = r2 / R2;
  if (s >= 1.0) return 0.0;
  const PolyEval e = eval(m, x1, x2);
  const double q = 1.0 - s;
  const double b = std::exp(-c * s / q);
  const double d1 = -c / (q * q), d2 = -2.0 * c / (q * q * q); // derivatives of the exponent
  const double db = b * d1, d2b = b * (d1 * d1 + d2);
  const double lapb = d2b * 4.0 * r2 / (R2 * R2) + db * 4.0 / R2;
  const double gb1 = db * 2.0 * x1 / R2, gb2 = db * 2.0 * x2 / R2;
  return e.lap * b + 2.0 * (e.p1 * gb1 + e.p2 * gb2) + e.p * lapb;
}

} // namespace initial_detail

/// omega_0 = eps * H(phi) / max|H(phi)| for the weighted Hessian H, so moments of order <= 1 vanish.
inline ScalarField make_initial_vorticity(const InitialDataSpec& spec, const GridSpec& g) {
  g.validate();
  if (!(spec.width > 0.0)) throw ParameterError("initial width must be positive");
  if (spec.shape != InitialShape::custom_samples && spec.width > g.L / 16.0 + 1e-12)
    throw ParameterError("initial width sigma must satisfy sigma <= L/16");
  ScalarField w(g);
  switch (spec.shape) {
    case InitialShape::laplacian_gaussian:
      w = sample(g, [&](double a, double b) {
        return initial_detail::hessian_gaussian(spec.modulation, spec.hessian, spec.width, a, b);
      });
      break;
    case InitialShape::curl_of_compact_bump:
      w = sample(g, [&](double a, double b) {
        return initial_detail::hessian_bump(spec.modulation, spec.hessian, spec.width, a, b);
      });
      break;
    case InitialShape::custom_samples:
      if (!spec.samples) throw ConstructionError("custom_samples shape needs sample data");
      require_same_grid(spec.samples->grid, g);
      w = *spec.samples;
      break;
  }
  const double peak = max_abs(w.data);
  if (spec.amplitude == 0.0 || peak == 0.0) {
    for (auto& v : w.data) v = 0.0;
  } else {
    for (auto& v : w.data) v *= spec.amplitude / peak;
  }
  w.time = 0.0;
  for (const auto& a : indices_up_to(1)) {
    const double m = moment(w, a);
    if (std::abs(m) > spec.moment_tolerance * std::max(1.0, std::abs(spec.amplitude)))
      throw ConstructionError("initial vorticity moment " + a.str() + " = " + std::to_string(m) +
                              " does not vanish");
  }
  return w;
}

} // namespace nsfar
