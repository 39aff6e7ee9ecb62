#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "nsfar/errors.hpp"

namespace nsfar {

/// Uniform periodic grid on the box [-L, L)^2 with n points per axis.
struct GridSpec {
  int n = 256;
  double L = 24.0;
  double dealias_fraction = 2.0 / 3.0;

  double h() const { return 2.0 * L / n; }
  double x(int i) const { return -L + i * h(); }
  /// Wavenumber unit pi / L.
  double dk() const { return std::numbers::pi / L; }
  /// Signed integer wavenumber for row index j in [0, n).
  int wave(int j) const { return j <= n / 2 ? j : j - n; }
  int half() const { return n / 2 + 1; }
  std::size_t size() const { return static_cast<std::size_t>(n) * n; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(n) * half(); }

  void validate() const {
    if (n < 8 || (n & (n - 1)) != 0)
      throw ParameterError("grid size n must be a power of two >= 8, got " + std::to_string(n));
    if (!(L > 0.0)) throw ParameterError("box half-length L must be positive");
    if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
      throw ParameterError("dealias_fraction must lie in (0, 1]");
  }

  bool operator==(const GridSpec& o) const {
    return n == o.n && L == o.L && dealias_fraction == o.dealias_fraction;
  }
};

/// Samples f(x1, x2) at data[j * n + i], x1 = x(i), x2 = x(j).
struct ScalarField {
  GridSpec grid;
  std::vector<double> data;
  double time = 0.0;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double t = 0.0)
      : grid(g), data(g.size(), 0.0), time(t) {}

  double& at(int i, int j) { return data[static_cast<std::size_t>(j) * grid.n + i]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(j) * grid.n + i]; }
};

struct VectorField {
  GridSpec grid;
  std::vector<double> c1, c2;
  double time = 0.0;

  VectorField() = default;
  explicit VectorField(const GridSpec& g, double t = 0.0)
      : grid(g), c1(g.size(), 0.0), c2(g.size(), 0.0), time(t) {}

  VectorField& operator+=(const VectorField& o) {
    for (std::size_t k = 0; k < c1.size(); ++k) {
      c1[k] += o.c1[k];
      c2[k] += o.c2[k];
    }
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (std::size_t k = 0; k < c1.size(); ++k) {
      c1[k] -= o.c1[k];
      c2[k] -= o.c2[k];
    }
    return *this;
  }
  VectorField& operator*=(double s) {
    for (std::size_t k = 0; k < c1.size(); ++k) {
      c1[k] *= s;
      c2[k] *= s;
    }
    return *this;
  }
};

/// Non-redundant half spectrum of a real field (FFTW r2c layout):
/// coefficient of wave (wave(j), i) at c[j * half + i], i in [0, n/2].
struct SpectralField {
  GridSpec grid;
  std::vector<std::complex<double>> c;

  SpectralField() = default;
  explicit SpectralField(const GridSpec& g) : grid(g), c(g.spectral_size()) {}
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b))
    throw ShapeError("grid mismatch: n=" + std::to_string(a.n) + " vs " + std::to_string(b.n) +
                     ", L=" + std::to_string(a.L) + " vs " + std::to_string(b.L));
}

inline ScalarField sample(const GridSpec& g, const std::function<double(double, double)>& f,
                          double t = 0.0) {
  ScalarField out(g, t);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) out.at(i, j) = f(g.x(i), g.x(j));
  return out;
}

template <class F>
VectorField sample_vector(const GridSpec& g, F&& f, double t = 0.0) {
  VectorField out(g, t);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const auto v = f(g.x(i), g.x(j));
      const std::size_t k = static_cast<std::size_t>(j) * g.n + i;
      out.c1[k] = v[0];
      out.c2[k] = v[1];
    }
  return out;
}

} // namespace nsfar
