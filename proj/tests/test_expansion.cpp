#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nsfar/expansion.hpp"
#include "nsfar/initial_data.hpp"
#include "nsfar/solver.hpp"

using namespace nsfar;

namespace {

GridSpec grid(int n, double L) {
  GridSpec g;
  g.n = n;
  g.L = L;
  return g;
}

const Trajectory& trajectory() {
  static const Trajectory tr = [] {
    const auto g = grid(128, 16.0);
    InitialDataSpec s;
    s.amplitude = 0.5;
    s.width = 1.0;
    s.modulation.terms = {{{1, 0}, 0.4}, {{0, 1}, -0.3}, {{1, 1}, 0.2}};
    SolverConfig c;
    c.grid = g;
    c.t_max = 4.0;
    c.dt = 0.05;
    c.dt_initial = 0.002;
    c.boundary_floor = 1e-4;
    return run(make_initial_vorticity(s, g), c);
  }();
  return tr;
}

const ExpansionCoefficients& coefficients() {
  static const ExpansionCoefficients c = ExpansionCoefficients::from_table(trajectory().moments);
  return c;
}

double max_diff(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.c1.size(); ++k)
    m = std::max({m, std::abs(a.c1[k] - b.c1[k]), std::abs(a.c2[k] - b.c2[k])});
  return m;
}

double sup(const VectorField& a) { return std::max(max_abs(a.c1), max_abs(a.c2)); }

/// lambda^{2+m} F(lambda^2 t, lambda x) against F(t, x), sampled on matching grids.
template <class Build>
double scaling_defect(Build&& build, int m, double t, double lambda, int n = 64, double L = 8.0) {
  const auto a = build(t, grid(n, L));
  auto b = build(lambda * lambda * t, grid(n, lambda * L));
  b *= std::pow(lambda, 2 + m);
  return max_diff(a, b) / sup(a);
}

} // namespace

TEST(Renormalizer, ClosedFormMatchesQuadrature) {
  for (int l = 0; l <= 2; ++l)
    for (double t : {0.3, 2.0, 17.0}) {
      const double q = quad::integrate_adaptive([&](double s) { return std::pow(s, l) * std::pow(1 + s, -l - 1); }, 0, t);
      EXPECT_NEAR(renormalizer_integral(l, t), q, 1e-12 * (1 + q)) << l << " " << t;
    }
  for (int l = 0; l <= 2; ++l) {
    const double S = 1e8;
    EXPECT_NEAR(renormalizer_constant(l), std::log(S) - renormalizer_integral(l, S), 1e-6);
  }
  EXPECT_EQ(renormalizer_constant(0), 0.0);
  EXPECT_EQ(renormalizer_constant(1), 1.0);
}

TEST(Renormalizer, PowerTailMatchesQuadrature) {
  for (double e : {-1.5, -2.0, -2.5, -3.0}) {
    const double q = quad::integrate_to_infinity([&](double s) { return std::pow(s, e); }, 3.0);
    EXPECT_NEAR(power_tail(e, 3.0), q, 1e-7 * q);
  }
  EXPECT_THROW(power_tail(-1.0, 2.0), DefinitionError);
  EXPECT_THROW(power_tail(-0.5, 2.0), DefinitionError);
}

TEST(Expansion, TaylorNormalizationOfTheNonlinearKernel) {
  // T(t - s, x - y) = sum d_t^l grad^b T(t, x) (-s)^l (-y)^b / (l! b!) + O(h^5)
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double t = 2.0, x1 = 1.5 + 0.3 * u(rng), x2 = -0.7 + 0.3 * u(rng);
    const double d1 = u(rng), d2 = u(rng), ds = u(rng);
    auto err = [&](double h) {
      const double s = ds * h * h, y1 = d1 * h, y2 = d2 * h;
      const Mat2 exact = kernels::riesz_tensor_deriv(0, {0, 0}, {t - s, x1 - y1, x2 - y2});
      Mat2 sum{};
      for (int k = 0; k <= 4; ++k)
        for (const auto& ix : time_space_indices(k)) {
          const Mat2 d = kernels::riesz_tensor_deriv(ix.l, ix.beta, {t, x1, x2});
          const double c = std::pow(-s, ix.l) * ix.beta.power(-y1, -y2) / ix.factorial();
          for (int e = 0; e < 4; ++e) sum[e] += c * d[e];
        }
      double m = 0.0;
      for (int e = 0; e < 4; ++e) m = std::max(m, std::abs(sum[e] - exact[e]));
      return m;
    };
    EXPECT_NEAR(std::log2(err(0.1) / err(0.05)), 5.0, 0.35);
  }
}

TEST(Expansion, ScalingIdentities) {
  const auto& c = coefficients();
  for (double lam : {0.5, 2.0}) {
    for (int m = 1; m <= 4; ++m) {
      EXPECT_LT(scaling_defect([&](double t, const GridSpec& g) { return build_U(m, t, g, c); }, m, 1.5, lam), 1e-12)
          << "U" << m;
      EXPECT_LT(scaling_defect([&](double t, const GridSpec& g) { return build_U_inf(m, t, g, c); }, m, 1.5, lam), 1e-12)
          << "U_inf" << m;
    }
    for (int p = 5; p <= 6; ++p)
      EXPECT_LT(scaling_defect([&](double t, const GridSpec& g) { return build_I(p, t, g, c); }, p, 1.5, lam), 1e-12)
          << "I" << p;
    for (int m = 3; m <= 4; ++m) {
      EXPECT_LT(scaling_defect([&](double t, const GridSpec& g) { return build_V(m, t, g, c); }, m, 1.5, lam), 1e-12)
          << "V" << m;
      EXPECT_LT(scaling_defect([&](double t, const GridSpec& g) { return build_J(m, t, g, c); }, m, 2.0, lam, 64, 12.0),
                1e-9)
          << "J" << m;
    }
  }
}

TEST(Expansion, CurlConsistency) {
  // eighth-order central differences away from the periodic seam
  const auto& c = coefficients();
  const auto g = grid(256, 8.0);
  const double w8[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  for (int m = 2; m <= 3; ++m) {
    auto u = build_U(m - 1, 2.0, g, c);
    u += build_U_inf(m - 1, 2.0, g, c);
    const auto w = build_Omega(m, 2.0, g, c);
    auto at = [&](const std::vector<double>& f, int i, int j) { return f[static_cast<std::size_t>(j) * g.n + i]; };
    double err = 0.0;
    for (int j = 64; j < 192; ++j)
      for (int i = 64; i < 192; ++i) {
        double d1u2 = 0.0, d2u1 = 0.0;
        for (int k = 1; k <= 4; ++k) {
          d1u2 += w8[k - 1] * (at(u.c2, i + k, j) - at(u.c2, i - k, j));
          d2u1 += w8[k - 1] * (at(u.c1, i, j + k) - at(u.c1, i, j - k));
        }
        err = std::max(err, std::abs((d1u2 - d2u1) / g.h() - w.at(i, j)));
      }
    EXPECT_LT(err, 1e-8) << m;
    EXPECT_GT(max_abs(w.data), 1e-6);
  }
}

TEST(Expansion, NonlinearProfilesHaveZeroMean) {
  const auto& c = coefficients();
  for (int p = 5; p <= 6; ++p) {
    EXPECT_LT(std::abs(c.m5({0, 0})[0]) + std::abs(c.m5({0, 0})[1]), 1e-12);
    EXPECT_LT(std::abs(c.m6({0, 0})[0]) + std::abs(c.m6({0, 0})[1]), 1e-12);
    const auto f = build_I(p, 1.0, grid(128, 16.0), c);
    EXPECT_GT(sup(f), 1e-8);
  }
}

TEST(Expansion, UnitMomentsScaleWithTime) {
  const auto& c = coefficients();
  const auto g = grid(128, 24.0);
  for (double s : {0.5, 2.0}) {
    const auto f = build_I(5, s, g, c);
    ScalarField a(g), b(g);
    a.data = f.c1;
    b.data = f.c2;
    for (const auto& beta : indices_up_to(3)) {
      const double sc = std::pow(s, 0.5 * (beta.order() - 5));
      EXPECT_NEAR(moment(a, beta), sc * c.m5(beta)[0], 1e-9 * (1 + std::abs(sc * c.m5(beta)[0])));
      EXPECT_NEAR(moment(b, beta), sc * c.m5(beta)[1], 1e-9 * (1 + std::abs(sc * c.m5(beta)[1])));
    }
  }
}

TEST(Expansion, KClosedFormMatchesRenormalizerQuadrature) {
  // K_3 = int_0^t sum d^l grad^b T(t) (-s)^l / (l! b!) int (-y)^b I_5(1+s, y) dy ds,
  // with the moments taken from I_5 sampled at 1 + s.
  const auto& c = coefficients();
  const double t = 3.0;
  const auto g = grid(128, 24.0);
  for (const auto& ix : time_space_indices(3)) {
    for (int comp = 0; comp < 2; ++comp) {
      auto integrand = [&](double s) {
        const auto f = build_I(5, 1.0 + s, g, c);
        ScalarField a(g);
        a.data = comp == 0 ? f.c1 : f.c2;
        return std::pow(-s, ix.l) * moment(a, ix.beta);
      };
      const double q = quad::integrate(integrand, 0.0, t, 4, 12);
      const double closed = (ix.l % 2 == 0 ? 1.0 : -1.0) * renormalizer_integral(ix.l, t) * c.m5(ix.beta)[comp];
      EXPECT_NEAR(closed, q, 1e-6 * (1 + std::abs(q))) << ix.beta.str() << comp;
    }
  }
  // term list normalization
  for (const auto& term : terms_K(3, t, c)) {
    const double closed = (term.l % 2 == 0 ? 1.0 : -1.0) * renormalizer_integral(term.l, t) / term.beta.factorial();
    EXPECT_NEAR(term.coef[0], closed * c.m5(term.beta)[0], 1e-15);
  }
}

TEST(Expansion, VTermsMatchTailQuadrature) {
  const auto& c = coefficients();
  const double t = 2.5;
  for (const auto& term : terms_V(4, t, c)) {
    const int k = 2 * term.l + term.beta.order();
    const double q = quad::integrate_to_infinity([&](double s) { return std::pow(s, 0.5 * (k - 6)); }, t);
    const double expect = -(term.l % 2 == 0 ? 1.0 : -1.0) * q * c.m6(term.beta)[1] / term.beta.factorial();
    EXPECT_NEAR(term.coef[1], expect, 1e-8 * (1 + std::abs(expect)));
  }
}

TEST(Expansion, FiniteCoefficientsRenormalizeTowardInfinite) {
  const auto& c = coefficients();
  for (const auto& [key, e] : c.infinite()) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_DOUBLE_EQ(e.value[j], e.finite[j] + e.tail[j]);
      EXPECT_GE(e.uncertainty[j], 0.0);
      EXPECT_TRUE(std::isfinite(e.value[j]));
    }
  }
  // at the horizon the finite coefficient equals the cached finite part
  const double T = c.horizon();
  for (int k = 3; k <= 4; ++k)
    for (const auto& ix : time_space_indices(k)) {
      const auto s = c.s_t(ix.l, ix.beta, T);
      EXPECT_DOUBLE_EQ(s[0], c.inf_entry(ix.l, ix.beta).finite[0]);
    }
}

TEST(Expansion, LinearCoefficientsHaveNoNonlinearPart) {
  const auto c = ExpansionCoefficients::linear(trajectory().moments.initial);
  const auto g = grid(64, 8.0);
  EXPECT_EQ(sup(build_U_inf(3, 1.0, g, c)), 0.0);
  EXPECT_EQ(sup(build_J(3, 1.0, g, c)), 0.0);
  EXPECT_GT(sup(build_U(2, 1.0, g, c)), 0.0);
}

TEST(Expansion, JExtrapolationConvergesAndIsDepthStable) {
  const auto& c = coefficients();
  const auto g = grid(128, 16.0);
  ExpansionOptions o = c.options();
  const auto r = build_J_detailed(3, 1.0, g, c, o);
  ASSERT_EQ(r.increments.size(), 3u);
  EXPECT_LT(r.increments[1], r.increments[0]);
  EXPECT_LT(r.increments[2], r.increments[1]);
  o.j_nodes *= 2;
  const auto r2 = build_J_detailed(3, 1.0, g, c, o);
  EXPECT_LT(max_diff(r.field, r2.field), 1e-4 * sup(r.field));
  EXPECT_GT(sup(r.field), 0.0);
}

TEST(Expansion, JModeMatchesDirectTimeQuadrature) {
  // Oracle: I_5(s) sampled at each s on its own grid, a direct Fourier sum
  // at a single mode and adaptive quadrature in s = u^2.
  const auto& c = coefficients();
  const auto g = grid(64, 16.0);
  const double t = 1.0;
  const auto J = build_J(3, t, g, c);
  ScalarField a(g);
  a.data = J.c1;
  const auto spec = to_spectral(a);
  std::vector<Vec2> M;
  for (const auto& b : indices_up_to(3)) M.push_back(c.m5(b));
  for (auto [k1, k2] : {std::pair{2, -3}, std::pair{6, 2}, std::pair{10, -7}}) {
    const double xi1 = g.dk() * k1, xi2 = g.dk() * k2, xx = xi1 * xi1 + xi2 * xi2;
    auto integrand = [&](double uu, bool imag) {
      const double s = uu * uu;
      const double sc = std::sqrt(s);
      const auto pg = grid(128, 12.0 * sc);
      const auto f = build_I(5, s, pg, c);
      std::complex<double> h1{}, h2{};
      for (int j = 0; j < pg.n; ++j)
        for (int i = 0; i < pg.n; ++i) {
          const auto ph = std::polar(pg.h() * pg.h(), -(xi1 * pg.x(i) + xi2 * pg.x(j)));
          h1 += ph * f.c1[static_cast<std::size_t>(j) * pg.n + i];
          h2 += ph * f.c2[static_cast<std::size_t>(j) * pg.n + i];
        }
      std::complex<double> p1{}, p2{};
      for (int k = 0; k <= 3; ++k)
        for (const auto& ix : time_space_indices(k)) {
          const auto ib = std::pow(std::complex<double>(0, xi1), ix.beta.a1) *
                          std::pow(std::complex<double>(0, xi2), ix.beta.a2);
          const double w = std::pow(xx, ix.l) / ix.factorial() * std::pow(s, 0.5 * (k - 5));
          p1 += w * ib * M[flat_index(ix.beta)][0];
          p2 += w * ib * M[flat_index(ix.beta)][1];
        }
      const auto v1 = std::exp(-(t - s) * xx) * h1 - std::exp(-t * xx) * p1;
      const auto v2 = std::exp(-(t - s) * xx) * h2 - std::exp(-t * xx) * p2;
      const auto j1 = xi2 * (xi1 * v1 + xi2 * v2) / xx;
      return 2.0 * uu * (imag ? j1.imag() : j1.real());
    };
    const double re = quad::integrate([&](double u) { return integrand(u, false); }, 0.0, 1.0, 6, 10);
    const double im = quad::integrate([&](double u) { return integrand(u, true); }, 0.0, 1.0, 6, 10);
    const std::complex<double> expect =
        std::complex<double>(re, im) * (((k1 + k2) % 2 == 0) ? 1.0 : -1.0) / (4.0 * g.L * g.L);
    const int row = k2 >= 0 ? k2 : g.n + k2;
    const auto got = spec.c[static_cast<std::size_t>(row) * g.half() + k1];
    EXPECT_NEAR(got.real(), expect.real(), 1e-4 * std::abs(expect) + 1e-14) << k1 << "," << k2;
    EXPECT_NEAR(got.imag(), expect.imag(), 1e-4 * std::abs(expect) + 1e-14) << k1 << "," << k2;
  }
}

TEST(Expansion, AssemblyDifferenceIsAlgebraic) {
  // thm_st - thm_t = sum_m (U_m^t - U_m^inf) - V_3 - V_4
  const auto& c = coefficients();
  const auto g = grid(64, 16.0);
  const double t = trajectory().moments.times[trajectory().moments.times.size() / 2];
  auto d = assemble(Variant::thm_st, t, g, c);
  d -= assemble(Variant::thm_t, t, g, c);
  VectorField e(g, t);
  for (int m = 1; m <= 4; ++m) {
    e += build_U_t(m, t, g, c);
    e -= build_U_inf(m, t, g, c);
  }
  e -= build_V(3, t, g, c);
  e -= build_V(4, t, g, c);
  EXPECT_LT(max_diff(d, e), 1e-12 * std::max(1.0, sup(e)));
}

TEST(Expansion, LowOrderAssemblyMatchesPointwiseSum) {
  const auto& c = coefficients();
  const auto g = grid(32, 8.0);
  const double t = 1.7;
  const auto a = assemble(Variant::prop_lowt, t, g, c);
  for (int trial = 0; trial < 20; ++trial) {
    const int i = (trial * 7) % g.n, j = (trial * 13 + 3) % g.n;
    const SpaceTimePoint p{t, g.x(i), g.x(j)};
    Vec2 sum{};
    for (int m = 1; m <= 2; ++m) {
      for (const auto& al : indices_of_order(m + 1)) {
        const Vec2 v = kernels::bs_kernel_deriv(al, p);
        for (int q = 0; q < 2; ++q) sum[q] += v[q] * c.m(al) / al.factorial();
      }
      for (const auto& b : indices_of_order(m)) {
        const Vec2 v = kernels::apply(kernels::riesz_tensor_deriv(0, b, p), c.s_inf(0, b));
        for (int q = 0; q < 2; ++q) sum[q] += v[q] / b.factorial();
      }
    }
    const std::size_t idx = static_cast<std::size_t>(j) * g.n + i;
    EXPECT_NEAR(a.c1[idx], sum[0], 1e-12 * (1 + std::abs(sum[0])));
    EXPECT_NEAR(a.c2[idx], sum[1], 1e-12 * (1 + std::abs(sum[1])));
  }
}

TEST(Expansion, UnsupportedOrdersAreRejected) {
  const auto& c = coefficients();
  const auto g = grid(32, 8.0);
  EXPECT_THROW(build_K(2, 1.0, g, c), UnsupportedOrderError);
  EXPECT_THROW(build_I(4, 1.0, g, c), UnsupportedOrderError);
  EXPECT_THROW(build_U_inf(5, 1.0, g, c), UnsupportedOrderError);
  EXPECT_THROW(build_Omega(4, 1.0, g, c), UnsupportedOrderError);
  EXPECT_THROW(build_U(1, 0.0, g, c), DomainError);
}
