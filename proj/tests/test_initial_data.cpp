#include <gtest/gtest.h>

#include <cmath>

#include "nsfar/fields.hpp"
#include "nsfar/initial_data.hpp"

using namespace nsfar;

namespace {

GridSpec grid(int n = 256, double L = 24.0) {
  GridSpec g;
  g.n = n;
  g.L = L;
  return g;
}

InitialDataSpec gaussian_spec(double eps = 0.1, double sigma = 1.0) {
  InitialDataSpec s;
  s.amplitude = eps;
  s.width = sigma;
  return s;
}

} // namespace

TEST(InitialData, LaplacianGaussianHasVanishingLowMoments) {
  const auto w = make_initial_vorticity(gaussian_spec(), grid());
  for (const auto& a : indices_up_to(1)) EXPECT_LE(std::abs(moment(w, a)), 1e-11) << a.str();
  EXPECT_NEAR(max_abs(w.data), 0.1, 1e-15);
}

TEST(InitialData, SecondMomentsAreGenericallyNonzero) {
  const auto w = make_initial_vorticity(gaussian_spec(), grid());
  EXPECT_GT(std::abs(moment(w, {2, 0})), 1e-3);
  // Radial data: m_(2,0) = m_(0,2), m_(1,1) = 0.
  EXPECT_NEAR(moment(w, {2, 0}), moment(w, {0, 2}), 1e-12);
  EXPECT_LE(std::abs(moment(w, {1, 1})), 1e-12);
}

TEST(InitialData, ZeroAmplitudeGivesZeroField) {
  const auto w = make_initial_vorticity(gaussian_spec(0.0), grid(64, 16));
  EXPECT_EQ(max_abs(w.data), 0.0);
}

TEST(InitialData, ClosedFormMatchesSpectralLaplacian) {
  const auto g = grid(256, 16.0);
  InitialDataSpec s = gaussian_spec(1.0, 1.0);
  s.modulation.terms = {{{1, 0}, 0.3}, {{0, 2}, -0.2}, {{1, 1}, 0.15}};
  const auto w = make_initial_vorticity(s, g);
  const auto phi = sample(g, [&](double a, double b) {
    return initial_detail::eval(s.modulation, a, b).p * std::exp(-(a * a + b * b));
  });
  auto lap = spectral_derivative(phi, {2, 0});
  const auto l2 = spectral_derivative(phi, {0, 2});
  for (std::size_t k = 0; k < lap.data.size(); ++k) lap.data[k] += l2.data[k];
  const double scale = max_abs(lap.data);
  double err = 0.0;
  for (std::size_t k = 0; k < lap.data.size(); ++k) err = std::max(err, std::abs(lap.data[k] / scale - w.data[k]));
  EXPECT_LT(err, 1e-10);
}

TEST(InitialData, ModulatedDataKeepsMomentConditionAndBreaksSymmetry) {
  InitialDataSpec s = gaussian_spec(0.1, 1.0);
  s.modulation.terms = {{{1, 0}, 0.4}, {{0, 1}, -0.25}, {{2, 1}, 0.1}};
  const auto w = make_initial_vorticity(s, grid());
  for (const auto& a : indices_up_to(1)) EXPECT_LE(std::abs(moment(w, a)), 1e-11);
  EXPECT_GT(std::abs(moment(w, {2, 1})), 1e-4);
  EXPECT_GT(std::abs(moment(w, {3, 0})), 1e-4);
  // int y^a Lap(phi) = int Lap(y^a) phi, and Lap(x1 x2) = 0.
  EXPECT_LE(std::abs(moment(w, {1, 1})), 1e-12);
}

TEST(InitialData, CompactBumpHasVanishingLowMoments) {
  InitialDataSpec s = gaussian_spec(0.2, 1.5);
  s.shape = InitialShape::curl_of_compact_bump;
  s.modulation.terms = {{{1, 0}, 0.3}};
  const auto w = make_initial_vorticity(s, grid(2048, 24.0));
  for (const auto& a : indices_up_to(1)) EXPECT_LE(std::abs(moment(w, a)), 1e-11);
  for (int j = 0; j < w.grid.n; ++j) {
    for (int i = 0; i < w.grid.n; ++i) {
      if (std::hypot(w.grid.x(i), w.grid.x(j)) >= 1.5) ASSERT_EQ(w.at(i, j), 0.0);
    }
  }
}

TEST(InitialData, CompactBumpMatchesSpectralLaplacian) {
  const auto g = grid(2048, 24.0);
  Modulation m;
  m.terms = {{{0, 1}, -0.5}};
  const double R = 1.5;
  const auto phi = sample(g, [&](double a, double b) {
    const double s = (a * a + b * b) / (R * R);
    return s >= 1.0 ? 0.0 : initial_detail::eval(m, a, b).p * std::exp(-4.0 * s / (1.0 - s));
  });
  auto lap = spectral_derivative(phi, {2, 0});
  const auto l2 = spectral_derivative(phi, {0, 2});
  const auto w = sample(g, [&](double a, double b) { return initial_detail::laplacian_bump(m, R, a, b); });
  double err = 0.0;
  for (std::size_t k = 0; k < w.data.size(); ++k) err = std::max(err, std::abs(lap.data[k] + l2.data[k] - w.data[k]));
  EXPECT_LT(err, 1e-6 * max_abs(w.data));
}

TEST(InitialData, CustomSamplesWithMassAreRejected) {
  const auto g = grid(128, 16.0);
  InitialDataSpec s;
  s.shape = InitialShape::custom_samples;
  s.amplitude = 1.0;
  s.samples = sample(g, [](double a, double b) { return std::exp(-(a * a + b * b)); });
  EXPECT_THROW(make_initial_vorticity(s, g), ConstructionError);
  s.samples.reset();
  EXPECT_THROW(make_initial_vorticity(s, g), ConstructionError);
}

TEST(InitialData, CustomSamplesWithoutMassAreRescaled) {
  const auto g = grid(128, 16.0);
  InitialDataSpec s;
  s.shape = InitialShape::custom_samples;
  s.amplitude = 0.5;
  s.samples = sample(g, [](double a, double b) {
    return initial_detail::laplacian_gaussian({}, 1.0, a, b);
  });
  const auto w = make_initial_vorticity(s, g);
  EXPECT_NEAR(max_abs(w.data), 0.5, 1e-15);
}

TEST(InitialData, WidthMustBeSmallAgainstBox) {
  EXPECT_THROW(make_initial_vorticity(gaussian_spec(0.1, 2.0), grid(128, 16.0)), ParameterError);
  EXPECT_THROW(make_initial_vorticity(gaussian_spec(0.1, -1.0), grid(128, 16.0)), ParameterError);
}

TEST(InitialData, DefaultHessianIsTheLaplacian) {
  Modulation m;
  m.terms = {{{1, 0}, 0.3}, {{1, 2}, -0.2}};
  for (double x : {-1.3, 0.0, 0.4, 2.1})
    for (double y : {-0.7, 0.2, 1.1}) {
      const double a = initial_detail::laplacian_gaussian(m, 1.2, x, y);
      EXPECT_NEAR(initial_detail::hessian_gaussian(m, {}, 1.2, x, y), a, 1e-14 * (1 + std::abs(a)));
      const double b = initial_detail::laplacian_bump(m, 2.5, x, y);
      EXPECT_NEAR(initial_detail::hessian_bump(m, {}, 2.5, x, y), b, 1e-13 * (1 + std::abs(b)));
    }
}

TEST(InitialData, WeightedHessianMatchesSpectralDerivatives) {
  const auto g = grid(256, 16.0);
  InitialDataSpec s = gaussian_spec(1.0, 1.0);
  s.modulation.terms = {{{1, 0}, 0.3}, {{0, 2}, -0.2}};
  s.hessian = {1.0, 0.8, 0.3};
  const auto phi = sample(g, [&](double a, double b) {
    return initial_detail::eval(s.modulation, a, b).p * std::exp(-(a * a + b * b));
  });
  const auto d11 = spectral_derivative(phi, {2, 0}), d12 = spectral_derivative(phi, {1, 1}),
             d22 = spectral_derivative(phi, {0, 2});
  const auto w = sample(g, [&](double a, double b) {
    return initial_detail::hessian_gaussian(s.modulation, s.hessian, 1.0, a, b);
  });
  double err = 0.0;
  for (std::size_t k = 0; k < w.data.size(); ++k)
    err = std::max(err, std::abs(d11.data[k] + 0.8 * d12.data[k] + 0.3 * d22.data[k] - w.data[k]));
  EXPECT_LT(err, 1e-10 * max_abs(w.data));
}

TEST(InitialData, HessianWeightsSetSecondMomentRatios) {
  InitialDataSpec s = gaussian_spec(0.5, 1.0);
  s.modulation.terms = {{{1, 0}, 0.4}};
  s.hessian = {1.0, 0.8, 0.3};
  const auto w = make_initial_vorticity(s, grid());
  for (const auto& a : indices_up_to(1)) EXPECT_LE(std::abs(moment(w, a)), 1e-11);
  // int y^a H(phi) = int H*(y^a) phi: 2 h20, h11, 2 h02 times int phi
  const double m20 = moment(w, {2, 0});
  EXPECT_NEAR(moment(w, {0, 2}) / m20, 0.3, 1e-10);
  EXPECT_NEAR(moment(w, {1, 1}) / m20, 0.4, 1e-10);
  s.shape = InitialShape::curl_of_compact_bump;
  s.width = 1.5;
  const auto b = make_initial_vorticity(s, grid(2048, 24.0));
  for (const auto& a : indices_up_to(1)) EXPECT_LE(std::abs(moment(b, a)), 1e-11);
  EXPECT_NEAR(moment(b, {0, 2}) / moment(b, {2, 0}), 0.3, 1e-8);
}
