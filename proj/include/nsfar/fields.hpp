#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "nsfar/errors.hpp"
#include "nsfar/fft.hpp"
#include "nsfar/grid.hpp"
#include "nsfar/multi_index.hpp"

namespace nsfar {

using cplx = std::complex<double>;

/// Fourier-series coefficients (forward FFT divided by n^2).
inline SpectralField to_spectral(const ScalarField& f) {
  f.grid.validate();
  if (f.data.size() != f.grid.size()) throw ShapeError("field sample count does not match grid");
  SpectralField s(f.grid);
  fft::plan(f.grid.n).forward(f.data.data(), s.c.data());
  const double inv = 1.0 / static_cast<double>(f.grid.size());
  for (auto& v : s.c) v *= inv;
  return s;
}

inline ScalarField from_spectral(const SpectralField& s, double time = 0.0) {
  if (s.c.size() != s.grid.spectral_size()) throw ShapeError("spectral size does not match grid");
  ScalarField f(s.grid, time);
  std::vector<cplx> work = s.c;
  fft::plan(s.grid.n).backward(work.data(), f.data.data());
  return f;
}

/// Calls fn(index, k1, k2) with signed integer wavenumbers over the half spectrum.
template <class Fn>
void for_each_mode(const GridSpec& g, Fn&& fn) {
  const int hf = g.half();
  for (int j = 0; j < g.n; ++j) {
    const int k2 = g.wave(j);
    for (int i = 0; i < hf; ++i) fn(static_cast<std::size_t>(j) * hf + i, i, k2);
  }
}

inline bool is_nyquist(const GridSpec& g, int k1, int k2) {
  return k1 == g.n / 2 || k2 == g.n / 2 || k2 == -g.n / 2;
}

/// Multiplies by m(xi1, xi2); modes on the Nyquist lines are zeroed.
template <class M>
SpectralField apply_multiplier(const SpectralField& s, M&& m) {
  SpectralField out(s.grid);
  const double dk = s.grid.dk();
  for_each_mode(s.grid, [&](std::size_t idx, int k1, int k2) {
    out.c[idx] = is_nyquist(s.grid, k1, k2) ? cplx{} : m(dk * k1, dk * k2) * s.c[idx];
  });
  return out;
}

/// Sum of |c|^2 over the full spectrum (Parseval: equals mean of |f|^2).
inline double spectral_energy(const SpectralField& s) {
  double e = 0.0;
  const int n = s.grid.n;
  for_each_mode(s.grid, [&](std::size_t idx, int k1, int) {
    const double w = (k1 == 0 || k1 == n / 2) ? 1.0 : 2.0;
    e += w * std::norm(s.c[idx]);
  });
  return e;
}

inline double mean(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.data) s += v;
  return s / static_cast<double>(f.data.size());
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct BiotSavartOptions {
  double mass_tolerance = 1e-10;
};

/// Periodic Biot-Savart law: u_hat = (i xi2, -i xi1) / |xi|^2 * omega_hat, so
/// that curl u = omega and div u = 0.
inline VectorField biot_savart_velocity(const ScalarField& omega, const BiotSavartOptions& opt = {}) {
  const double m = mean(omega);
  if (std::abs(m) > opt.mass_tolerance)
    throw MassError("mean vorticity " + std::to_string(m) + " exceeds tolerance; periodic Biot-Savart needs zero mean");
  SpectralField w = to_spectral(omega);
  w.c[0] = 0.0;
  const auto u1 = apply_multiplier(w, [](double a, double b) {
    const double k2 = a * a + b * b;
    return k2 == 0.0 ? cplx{} : cplx(0.0, b / k2);
  });
  const auto u2 = apply_multiplier(w, [](double a, double b) {
    const double k2 = a * a + b * b;
    return k2 == 0.0 ? cplx{} : cplx(0.0, -a / k2);
  });
  VectorField u(omega.grid, omega.time);
  u.c1 = from_spectral(u1).data;
  u.c2 = from_spectral(u2).data;
  return u;
}

inline ScalarField curl(const VectorField& u) {
  ScalarField f1(u.grid), f2(u.grid);
  f1.data = u.c1;
  f2.data = u.c2;
  const auto s1 = to_spectral(f1), s2 = to_spectral(f2);
  const auto d1u2 = apply_multiplier(s2, [](double k1, double) { return cplx(0.0, k1); });
  const auto d2u1 = apply_multiplier(s1, [](double, double k2) { return cplx(0.0, k2); });
  SpectralField c(u.grid);
  for (std::size_t k = 0; k < c.c.size(); ++k) c.c[k] = d1u2.c[k] - d2u1.c[k];
  return from_spectral(c, u.time);
}

inline ScalarField divergence(const VectorField& u) {
  ScalarField f1(u.grid), f2(u.grid);
  f1.data = u.c1;
  f2.data = u.c2;
  const auto s1 = to_spectral(f1), s2 = to_spectral(f2);
  SpectralField d(u.grid);
  const auto a = apply_multiplier(s1, [](double k1, double) { return cplx(0.0, k1); });
  const auto b = apply_multiplier(s2, [](double, double k2) { return cplx(0.0, k2); });
  for (std::size_t k = 0; k < d.c.size(); ++k) d.c[k] = a.c[k] + b.c[k];
  return from_spectral(d, u.time);
}

inline ScalarField spectral_derivative(const ScalarField& f, const MultiIndex& a) {
  const auto s = to_spectral(f);
  const auto d = apply_multiplier(s, [&](double k1, double k2) {
    return std::pow(cplx(0.0, k1), a.a1) * std::pow(cplx(0.0, k2), a.a2);
  });
  return from_spectral(d, f.time);
}

/// Exact heat flow e^{t Lap} on the periodic box.
inline ScalarField heat_flow(const ScalarField& f, double t) {
  const auto s = to_spectral(f);
  SpectralField out(s.grid);
  const double dk = s.grid.dk();
  for_each_mode(s.grid, [&](std::size_t idx, int k1, int k2) {
    const double kk = dk * dk * (double(k1) * k1 + double(k2) * k2);
    out.c[idx] = std::exp(-t * kk) * s.c[idx];
  });
  return from_spectral(out, f.time + t);
}

/// Norm region: the whole box, or the disk |x| <= radius.
struct Region {
  double radius = std::numeric_limits<double>::infinity();
  static Region full() { return {}; }
  static Region disk(double r) { return {r}; }
};

enum class NormKind { l1, l2, linf };

inline NormKind norm_kind(double q) {
  if (q == 1.0) return NormKind::l1;
  if (q == 2.0) return NormKind::l2;
  if (std::isinf(q) && q > 0) return NormKind::linf;
  throw ParameterError("unsupported norm exponent q=" + std::to_string(q) + "; use 1, 2 or inf");
}

/// gamma_q = 1 - 1/q.
inline double gamma_q(double q) {
  norm_kind(q);
  return std::isinf(q) ? 1.0 : 1.0 - 1.0 / q;
}

namespace detail {
template <class Mag>
double weighted_norm_impl(const GridSpec& g, double mu, double q, const Region& region, Mag&& mag) {
  if (mu < 0.0) throw ParameterError("weight exponent mu must be non-negative");
  const NormKind kind = norm_kind(q);
  const double h2 = g.h() * g.h();
  const double r2max = region.radius * region.radius;
  double acc = 0.0;
  for (int j = 0; j < g.n; ++j) {
    const double x2 = g.x(j);
    for (int i = 0; i < g.n; ++i) {
      const double x1 = g.x(i);
      const double r2 = x1 * x1 + x2 * x2;
      if (r2 > r2max) continue;
      const double w = mu == 0.0 ? 1.0 : std::pow(r2, 0.5 * mu);
      const double v = w * mag(static_cast<std::size_t>(j) * g.n + i);
      switch (kind) {
        case NormKind::l1: acc += v; break;
        case NormKind::l2: acc += v * v; break;
        case NormKind::linf: acc = std::max(acc, v); break;
      }
    }
  }
  switch (kind) {
    case NormKind::l1: return acc * h2;
    case NormKind::l2: return std::sqrt(acc * h2);
    case NormKind::linf: return acc;
  }
  return acc;
}
} // namespace detail

/// || |x|^mu f ||_q by the periodic trapezoid rule (max over nodes for q = inf).
inline double weighted_norm(const ScalarField& f, double mu, double q, const Region& region = {}) {
  return detail::weighted_norm_impl(f.grid, mu, q, region,
                                    [&](std::size_t k) { return std::abs(f.data[k]); });
}

/// Vector fields use the Euclidean magnitude pointwise.
inline double weighted_norm(const VectorField& u, double mu, double q, const Region& region = {}) {
  return detail::weighted_norm_impl(u.grid, mu, q, region,
                                    [&](std::size_t k) { return std::hypot(u.c1[k], u.c2[k]); });
}

/// int (-y)^alpha f(y) dy by the trapezoid rule.
inline double moment(const ScalarField& f, const MultiIndex& a) {
  const GridSpec& g = f.grid;
  std::vector<double> p1(g.n), p2(g.n);
  for (int i = 0; i < g.n; ++i) {
    p1[i] = std::pow(-g.x(i), a.a1);
    p2[i] = std::pow(-g.x(i), a.a2);
  }
  double s = 0.0;
  for (int j = 0; j < g.n; ++j) {
    double row = 0.0;
    for (int i = 0; i < g.n; ++i) row += p1[i] * f.at(i, j);
    s += p2[j] * row;
  }
  return s * g.h() * g.h();
}

/// All moments with |alpha| <= k, in indices_up_to order.
inline std::vector<double> moments_up_to(const ScalarField& f, int k) {
  std::vector<double> out;
  for (const auto& a : indices_up_to(k)) out.push_back(moment(f, a));
  return out;
}

struct FluxField {
  VectorField flux;         // omega * u
  std::array<double, 2> integral{}; // int omega u dx
};

inline FluxField pointwise_product(const ScalarField& omega, const VectorField& u) {
  require_same_grid(omega.grid, u.grid);
  FluxField out{VectorField(omega.grid, omega.time), {}};
  for (std::size_t k = 0; k < omega.data.size(); ++k) {
    out.flux.c1[k] = omega.data[k] * u.c1[k];
    out.flux.c2[k] = omega.data[k] * u.c2[k];
    out.integral[0] += out.flux.c1[k];
    out.integral[1] += out.flux.c2[k];
  }
  const double h2 = omega.grid.h() * omega.grid.h();
  out.integral[0] *= h2;
  out.integral[1] *= h2;
  return out;
}

inline VectorField residual(const VectorField& u, const VectorField& approx) {
  require_same_grid(u.grid, approx.grid);
  VectorField r = u;
  r -= approx;
  return r;
}

/// Trigonometric interpolation onto the 2n grid (Nyquist modes dropped).
inline ScalarField spectral_refine(const ScalarField& f) {
  const auto s = to_spectral(f);
  GridSpec fine = f.grid;
  fine.n *= 2;
  SpectralField t(fine);
  for_each_mode(f.grid, [&](std::size_t idx, int k1, int k2) {
    if (is_nyquist(f.grid, k1, k2)) return;
    const int row = k2 >= 0 ? k2 : k2 + fine.n;
    t.c[static_cast<std::size_t>(row) * fine.half() + k1] = s.c[idx];
  });
  return from_spectral(t, f.time);
}

inline VectorField spectral_refine(const VectorField& u) {
  ScalarField a(u.grid), b(u.grid);
  a.data = u.c1;
  b.data = u.c2;
  const auto fa = spectral_refine(a), fb = spectral_refine(b);
  VectorField out(fa.grid, u.time);
  out.c1 = fa.data;
  out.c2 = fb.data;
  return out;
}

struct ConvergedNorm {
  double value = 0.0;
  double refined = 0.0;
  bool resolved = true; // |refined - value| < threshold * refined
};

/// Weighted norm with the n -> 2n guard (trigonometric interpolation).
template <class Field>
ConvergedNorm weighted_norm_checked(const Field& f, double mu, double q, const Region& region = {},
                                    double threshold = 5e-3) {
  ConvergedNorm r;
  r.value = weighted_norm(f, mu, q, region);
  r.refined = weighted_norm(spectral_refine(f), mu, q, region);
  r.resolved = std::abs(r.refined - r.value) <= threshold * std::abs(r.refined);
  return r;
}

} // namespace nsfar
