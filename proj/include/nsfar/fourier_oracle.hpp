#pragma once

// Independent evaluation of the kernels as inverse Fourier integrals
//   K(t,x) = (2 pi)^{-2} int symbol(xi) e^{i x.xi} d xi
// in polar coordinates: periodic trapezoid in the angle, composite
// Gauss-Legendre in the radius.  Shares no code with kernels.hpp beyond the
// value types.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "nsfar/errors.hpp"
#include "nsfar/kernels.hpp"
#include "nsfar/multi_index.hpp"
#include "nsfar/quadrature.hpp"

namespace nsfar {

enum class KernelFamily { heat, biot_savart, riesz_tensor };

struct MultiplierSpec {
  int time_order = 0;
  MultiIndex space_index{};
  KernelFamily family = KernelFamily::heat;
};

struct QuadratureParams {
  int theta_nodes = 0;   // 0 = chosen from the oscillation frequency
  int radial_panels = 0; // 0 = chosen from the oscillation frequency
  int panel_order = 20;
  double tail = 1e-14;     // Gaussian tail bound defining the disk radius
  double tolerance = 1e-9; // on the error estimate, relative to the integrand mass
};

struct OracleResult {
  KernelValue value;
  double error_estimate = 0.0; // |I(N) - I(N/2)|, max over entries
  double integrand_mass = 0.0; // (2 pi)^{-2} int |symbol|, a bound on |value|
};

namespace oracle_detail {

struct Sums {
  std::array<double, 4> v{};
  double mass = 0.0;
};

inline Sums polar_sum(const MultiplierSpec& s, const SpaceTimePoint& p, double radius,
                      int n_theta, int panels, int order) {
  const quad::Rule& rule = quad::gauss_legendre(order);
  const int l = s.time_order;
  const MultiIndex b = s.space_index;
  const std::complex<double> i_pow = std::pow(std::complex<double>(0.0, 1.0), b.order());
  const double sign_l = (l % 2 == 0) ? 1.0 : -1.0;
  Sums out;
  const double dth = 2.0 * std::numbers::pi / n_theta;
  const double pw = radius / panels;
  for (int it = 0; it < n_theta; ++it) {
    const double th = it * dth;
    const double c = std::cos(th), sn = std::sin(th);
    for (int pn = 0; pn < panels; ++pn) {
      const double mid = (pn + 0.5) * pw;
      for (int q = 0; q < order; ++q) {
        const double rho = mid + 0.5 * pw * rule.nodes[q];
        const double w = 0.5 * pw * rule.weights[q] * dth;
        const double x1 = rho * c, x2 = rho * sn;
        // e^{-t r^2} (-r^2)^l (i xi)^beta
        const double base = std::exp(-p.t * rho * rho) * sign_l *
                            std::pow(rho * rho, l) * std::pow(x1, b.a1) *
                            std::pow(x2, b.a2);
        const std::complex<double> common =
            i_pow * base * std::polar(1.0, p.x1 * x1 + p.x2 * x2);
        // polar measure rho d rho d theta
        switch (s.family) {
          case KernelFamily::heat:
            out.v[0] += w * rho * common.real();
            out.mass += w * rho * std::abs(base);
            break;
          case KernelFamily::biot_savart: {
            // -i xi^perp / |xi|^2, xi^perp = (-xi2, xi1); rho / rho^2 = 1 / rho
            const std::complex<double> mi(0.0, -1.0);
            out.v[0] += w * (mi * (-sn) * common).real();
            out.v[1] += w * (mi * c * common).real();
            out.mass += w * std::abs(base);
            break;
          }
          case KernelFamily::riesz_tensor: {
            // -xi^perp_i xi_j / |xi|^2 times rho
            const double perp[2] = {-sn, c};
            const double dir[2] = {c, sn};
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j)
                out.v[2 * i + j] += w * rho * (-perp[i] * dir[j] * common).real();
            out.mass += w * rho * std::abs(base);
            break;
          }
        }
      }
    }
  }
  const double norm = 1.0 / (4.0 * std::numbers::pi * std::numbers::pi);
  for (auto& v : out.v) v *= norm;
  out.mass *= norm;
  return out;
}

inline double disk_radius(const MultiplierSpec& s, double t, double tail) {
  // smallest R with e^{-t R^2} (1 + R)^{2l+|beta|+2} below the tail bound
  const int deg = 2 * s.time_order + s.space_index.order() + 2;
  double r = 1.0 / std::sqrt(t);
  while (-t * r * r + deg * std::log1p(r) > std::log(tail)) r *= 1.05;
  return r;
}

} // namespace oracle_detail

inline OracleResult fourier_oracle(const MultiplierSpec& spec, const SpaceTimePoint& p,
                                   const QuadratureParams& qp = {}) {
  if (!(p.t > 0.0)) throw DomainError("fourier_oracle needs t > 0");
  if (spec.time_order < 0) throw DomainError("negative time order");
  const double radius = oracle_detail::disk_radius(spec, p.t, qp.tail);
  const double freq = std::hypot(p.x1, p.x2) * radius;
  int n_theta = qp.theta_nodes;
  if (n_theta <= 0) n_theta = 2 * static_cast<int>(std::ceil(freq + 40));
  int panels = qp.radial_panels;
  if (panels <= 0)
    panels = 4 + static_cast<int>(std::ceil((freq + radius * radius * p.t) / 6.0));
  if (n_theta % 2 != 0 || n_theta < 4) throw ParameterError("theta_nodes must be even, >= 4");

  const auto fine = oracle_detail::polar_sum(spec, p, radius, n_theta, 2 * panels, qp.panel_order);
  const auto coarse =
      oracle_detail::polar_sum(spec, p, radius, n_theta / 2, panels, qp.panel_order);
  OracleResult res;
  switch (spec.family) {
    case KernelFamily::heat: res.value.rank = KernelRank::scalar; break;
    case KernelFamily::biot_savart: res.value.rank = KernelRank::vector2; break;
    case KernelFamily::riesz_tensor: res.value.rank = KernelRank::tensor2x2; break;
  }
  res.value.entries = fine.v;
  res.integrand_mass = fine.mass;
  for (int i = 0; i < res.value.size(); ++i)
    res.error_estimate = std::max(res.error_estimate, std::abs(fine.v[i] - coarse.v[i]));
  if (res.error_estimate > qp.tolerance * fine.mass)
    throw AccuracyError("Fourier quadrature did not reach tolerance", res.error_estimate);
  return res;
}

} // namespace nsfar
