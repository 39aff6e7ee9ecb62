#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "nsfar/expansion.hpp"
#include "nsfar/kernel_fields.hpp"
#include "nsfar/kernels.hpp"
#include "nsfar/verify.hpp"

using namespace nsfar;

namespace {

std::vector<double> geometric(double a, double b, int n) {
  std::vector<double> t;
  for (int k = 0; k < n; ++k) t.push_back(a * std::pow(b / a, double(k) / (n - 1)));
  return t;
}

std::vector<double> series(const std::vector<double>& ts, double amp, double e, int p) {
  std::vector<double> v;
  for (double t : ts) v.push_back(amp * std::pow(t, e) * std::pow(std::log(t), p));
  return v;
}

} // namespace

TEST(RateFit, RecoversPurePowerLaw) {
  const auto ts = geometric(2.0, 32.0, 9);
  const auto f = rate_fit(ts, series(ts, 3.0, -1.5, 0), 0);
  EXPECT_NEAR(f.exponent, -1.5, 1e-12);
  EXPECT_NEAR(f.amplitude, 3.0, 1e-10);
  EXPECT_GE(f.r_squared, 1.0 - 1e-12);
  EXPECT_EQ(f.n_points, 9);
}

TEST(RateFit, LogCorrectionIsExactForLogPowers) {
  const auto ts = geometric(2.0, 32.0, 9);
  for (int p = 1; p <= 2; ++p) {
    const auto f = rate_fit(ts, series(ts, 0.7, -3.5 + p, p), p);
    EXPECT_NEAR(f.exponent, -3.5 + p, 1e-12) << p;
  }
}

TEST(RateFit, RandomPowerLawsProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ue(-5.0, 1.0), ua(1e-6, 1e3), ut(1.5, 4.0);
  std::uniform_int_distribution<int> up(0, 2);
  for (int k = 0; k < 40; ++k) {
    const double e = ue(rng), a = ua(rng), t0 = ut(rng);
    const int p = up(rng);
    const auto ts = geometric(t0, 16 * t0, 7 + k % 5);
    const auto f = rate_fit(ts, series(ts, a, e, p), p);
    EXPECT_NEAR(f.exponent, e, 1e-9);
    EXPECT_GE(f.r_squared, 1.0 - 1e-9);
  }
}

TEST(RateFit, ConstantSeriesHasZeroExponent) {
  const auto ts = geometric(1.0, 100.0, 8);
  const auto f = rate_fit(ts, std::vector<double>(8, 2.5), 0);
  EXPECT_EQ(f.exponent, 0.0);
  EXPECT_EQ(f.r_squared, 1.0);
}

TEST(RateFit, LogDetectionImprovesFitQuality) {
  // A residual carrying one log factor: the plain power fit is visibly worse.
  const auto ts = geometric(1.5, 1500.0, 12);
  const auto v = series(ts, 1.0, -2.5, 1);
  const auto plain = rate_fit(ts, v, 0), corrected = rate_fit(ts, v, 1);
  EXPECT_GE(corrected.r_squared - plain.r_squared, 1e-3);
  EXPECT_GT(plain.exponent, -2.5); // the log factor biases an uncorrected slope upward
}

TEST(RateFit, RejectsBadInput) {
  const auto ts = geometric(2.0, 32.0, 8);
  const auto good = series(ts, 1.0, -1.0, 0);
  EXPECT_THROW(rate_fit({1, 2, 3}, {1, 2, 3}, 0), FitError);
  EXPECT_THROW(rate_fit(ts, std::vector<double>(7, 1.0), 0), FitError);
  auto neg = good;
  neg[3] = -1.0;
  EXPECT_THROW(rate_fit(ts, neg, 0), FitError);
  auto rev = ts;
  std::swap(rev[2], rev[3]);
  EXPECT_THROW(rate_fit(rev, good, 0), FitError);
  EXPECT_THROW(rate_fit(geometric(2.0, 6.0, 8), good, 0), FitError);
  EXPECT_THROW(rate_fit(geometric(0.5, 32.0, 8), good, 1), FitError);
  EXPECT_THROW(rate_fit(ts, good, 3), FitError);
}

TEST(Judge, GatesAndNoiseFloor) {
  const auto ts = geometric(2.0, 32.0, 9);
  const auto v = series(ts, 1.0, -2.0, 0);
  EXPECT_EQ(judge("x", kInf, 0, -2.1, 0, Gate::two_sided, 0.15, ts, v, {}, 10).verdict, Verdict::pass);
  EXPECT_EQ(judge("x", kInf, 0, -2.5, 0, Gate::two_sided, 0.15, ts, v, {}, 10).verdict, Verdict::fail);
  EXPECT_EQ(judge("x", kInf, 0, -2.5, 0, Gate::upper_bound, 0.15, ts, v, {}, 10).verdict, Verdict::fail);
  EXPECT_EQ(judge("x", kInf, 0, -1.0, 0, Gate::upper_bound, 0.15, ts, v, {}, 10).verdict, Verdict::pass);
  EXPECT_EQ(judge("x", 1.0, 0, -9.0, 0, Gate::reported, 0.15, ts, v, {}, 10).verdict, Verdict::reported);

  // every late point inside 10x the noise: never a failure
  std::vector<double> noise(ts.size(), 0.0);
  for (std::size_t k = 4; k < ts.size(); ++k) noise[k] = v[k];
  const auto r = judge("x", kInf, 0, -5.0, 0, Gate::two_sided, 0.15, ts, v, noise, 10);
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  EXPECT_NE(r.notes.find("noise floor"), std::string::npos);
}

TEST(Judge, MuSlopeRegression) {
  std::vector<CheckReport> rows;
  for (double mu : {0.0, 2.0, 4.0}) {
    CheckReport r;
    r.mu = mu;
    r.measured_exponent = -3.7 + 0.52 * mu;
    rows.push_back(r);
  }
  EXPECT_NEAR(mu_slope(rows), 0.52, 1e-12);
  rows.resize(1);
  EXPECT_TRUE(std::isnan(mu_slope(rows)));
}

TEST(Verify, GammaExponent) {
  EXPECT_EQ(gamma_exponent(1.0), 0.0);
  EXPECT_EQ(gamma_exponent(2.0), 0.5);
  EXPECT_EQ(gamma_exponent(kInf), 1.0);
}

TEST(Verify, ScalingCasesSkipKindsWithoutPureScaling) {
  for (const auto& c : scaling_cases()) {
    EXPECT_NE(c.kind, TermKind::U_t);
    EXPECT_NE(c.kind, TermKind::K);
  }
  EXPECT_EQ(scaling_cases().size(), all_term_kinds().size() - 6);
}

TEST(Verify, GeometricTimes) {
  const auto ts = geometric_times(32.0, 1.0 / 16.0, 9);
  ASSERT_EQ(ts.size(), 9u);
  EXPECT_NEAR(ts.front(), 2.0, 1e-14);
  EXPECT_NEAR(ts.back(), 32.0, 1e-12);
  for (std::size_t k = 1; k < ts.size(); ++k) EXPECT_NEAR(ts[k] / ts[k - 1], std::pow(2.0, 0.5), 1e-12);
}

TEST(Verify, ReportCsvQuotesNotes) {
  CheckReport r;
  r.claim_tag = "thm_st";
  r.q = kInf;
  r.mu = 2;
  r.expected_exponent = -2.5;
  r.log_power = 2;
  r.measured_exponent = -2.61;
  r.r2 = 0.99;
  r.verdict = Verdict::pass;
  r.notes = "window [2, 32], \"tol\" 0.25";
  const auto path = std::filesystem::temp_directory_path() / "nsfar_report_test.csv";
  write_report_csv(path.string(), {r});
  std::ifstream f(path);
  std::string header, row;
  std::getline(f, header);
  std::getline(f, row);
  EXPECT_EQ(header, "claim_tag,q,mu,expected_exponent,log_power,measured_exponent,r2,verdict,notes");
  EXPECT_EQ(row, "thm_st,inf,2,-2.5,2,-2.61,0.99,pass,\"window [2, 32], \"\"tol\"\" 0.25\"");
  std::filesystem::remove(path);
  EXPECT_NE(summary_text({r}).find("pass 1, fail 0"), std::string::npos);
  EXPECT_FALSE(any_failed({r}));
}

// Oracle: omega_0 = grad^a G(tau) is a pure Hermite mode.  Its velocity is
// grad^a bs(t + tau); the profiles below |a| - 1 vanish, U_{|a|-1} is
// grad^a bs(t), and every later order is a Taylor term in tau.
TEST(LinearPart, HermiteModeResidualDropsByWholeOrders) {
  const double tau = 0.5;
  const MultiIndex a{2, 1};
  GridSpec g0{256, 16.0, 2.0 / 3.0};
  const auto w0 = sample(g0, [&](double x, double y) { return kernels::gauss_deriv(a, {tau, x, y}); });
  const auto c = ExpansionCoefficients::linear(moments_up_to(w0, kInitialMomentOrder));

  const auto ts = geometric(16.0, 1024.0, 7);
  std::vector<double> r1, r2, r4;
  for (double t : ts) {
    GridSpec g{64, 4.0 * std::sqrt(t), 2.0 / 3.0};
    VectorField u(g, t);
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        const Vec2 v = kernels::bs_kernel_deriv(a, {t + tau, g.x(i), g.x(j)});
        u.c1[static_cast<std::size_t>(j) * g.n + i] = v[0];
        u.c2[static_cast<std::size_t>(j) * g.n + i] = v[1];
      }
    const double scale = weighted_norm(u, 0.0, kInf);
    EXPECT_LT(weighted_norm(build_U(1, t, g, c), 0.0, kInf), 1e-10 * scale);
    auto rest = u;
    rest -= build_U(1, t, g, c);
    rest -= build_U(2, t, g, c);
    r2.push_back(weighted_norm(rest, 0.0, kInf));
    rest -= build_U(3, t, g, c);
    EXPECT_LT(weighted_norm(build_U(3, t, g, c), 0.0, kInf), 1e-9 * scale);
    rest -= build_U(4, t, g, c);
    r4.push_back(weighted_norm(rest, 0.0, kInf));
  }
  // |grad^a bs(t)| ~ t^{-2}; the tau and tau^2 Taylor terms give t^{-3} and t^{-4}.
  EXPECT_NEAR(rate_fit(ts, r2, 0).exponent, -3.0, 0.05);
  EXPECT_NEAR(rate_fit(ts, r4, 0).exponent, -4.0, 0.05);
}
