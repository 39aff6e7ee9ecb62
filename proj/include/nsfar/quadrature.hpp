#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "nsfar/errors.hpp"

namespace nsfar::quad {

struct Rule {
  std::vector<double> nodes;   // on [-1, 1]
  std::vector<double> weights; // sum to 2
};

/// Gauss-Legendre rule of n points, Newton iteration on P_n.
inline Rule compute_gauss_legendre(int n) {
  if (n < 1) throw ParameterError("Gauss-Legendre rule needs n >= 1");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

/// Cached rule; thread safe.
inline const Rule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

/// Composite Gauss-Legendre on [a, b] with `panels` equal panels.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int panels = 8, int order = 16) {
  const Rule& r = gauss_legendre(order);
  const double w = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * w;
    for (int i = 0; i < order; ++i) sum += r.weights[i] * f(mid + 0.5 * w * r.nodes[i]);
  }
  return 0.5 * w * sum;
}

/// Adaptive bisection driven by the gap between 16- and 24-point rules.
inline double integrate_adaptive(const std::function<double(double)>& f, double a,
                                 double b, double rel_tol = 1e-12, int depth = 40) {
  auto rule = [&](double lo, double hi, int n) {
    const Rule& r = gauss_legendre(n);
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
    return s * half;
  };
  std::function<double(double, double, double, int)> rec =
      [&](double lo, double hi, double scale, int d) -> double {
    const double coarse = rule(lo, hi, 16);
    const double fine = rule(lo, hi, 24);
    if (d <= 0 || std::abs(fine - coarse) <= rel_tol * std::max(scale, std::abs(fine)))
      return fine;
    const double mid = 0.5 * (lo + hi);
    return rec(lo, mid, scale, d - 1) + rec(mid, hi, scale, d - 1);
  };
  const double scale = std::abs(rule(a, b, 24));
  return rec(a, b, scale, depth);
}

/// Integral over [a, inf) via the substitution s = a + u / (1 - u).
inline double integrate_to_infinity(const std::function<double(double)>& f, double a,
                                    double rel_tol = 1e-12) {
  auto g = [&](double u) {
    const double one = 1.0 - u;
    return f(a + u / one) / (one * one);
  };
  return integrate_adaptive(g, 0.0, 1.0, rel_tol);
}

} // namespace nsfar::quad
