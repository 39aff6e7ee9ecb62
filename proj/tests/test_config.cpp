#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nsfar/pipeline.hpp"

using namespace nsfar;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("nsfar_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig tiny() {
  RunConfig c;
  c.grid = {64, 16.0, 2.0 / 3.0};
  c.solver.t_max = 4.0;
  c.solver.dt = 0.1;
  c.solver.dt_initial = 0.01;
  c.solver.boundary_floor = 1e-3;
  c.snapshot_count = 6;
  c.snapshot_first_fraction = 0.25;
  c.initial.amplitude = 0.5;
  c.initial.modulation.terms = {{{1, 0}, 0.4}, {{0, 1}, -0.3}};
  return c;
}

} // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  const auto j = to_json(c);
  EXPECT_EQ(to_json(parse_config(j)), j);
}

TEST(Config, ReferenceFileRoundTripsAndIsComplete) {
  const auto c = load_config(fs::path(NSFAR_SOURCE_DIR) / "configs/reference.json");
  EXPECT_EQ(c.grid.n, 512);
  EXPECT_EQ(c.solver.t_max, 32.0);
  const auto j = to_json(c);
  EXPECT_EQ(to_json(parse_config(j)), j);
  // the bundled file spells out every key, so it equals its own resolution
  std::ifstream f(fs::path(NSFAR_SOURCE_DIR) / "configs/reference.json");
  EXPECT_EQ(json::parse(f), j);
}

TEST(Config, PartialConfigKeepsDefaults) {
  const auto c = parse_config_text(R"({"solver": {"t_max": 9.0}, "verify": {"mus_inf": [0, 1, 2]}})");
  EXPECT_EQ(c.solver.t_max, 9.0);
  EXPECT_EQ(c.solver.dt, SolverConfig{}.dt);
  EXPECT_EQ(c.verify.mus_inf, (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(c.verify.tol_exponent, VerifyOptions{}.tol_exponent);
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_THROW(parse_config_text(R"({"gird": {}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"solver": {"tmax": 4}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"expansion": {"profile_grid": {"n": 64, "size": 3}}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"acceptance": {"kernel_tolerance": 1}})"), ConfigError);
  try {
    parse_config_text(R"({"verify": {"tol_exp": 0.1}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("config.verify.tol_exp"), std::string::npos);
  }
}

TEST(Config, InvalidValuesAreRejected) {
  EXPECT_THROW(parse_config_text("{not json"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"solver": {"stepper": "euler"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"solver": {"dt": "fast"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"solver": {"dt": -1}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"solver": {"t_max": 100}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"initial_data": {"modulation": [[1, 0]]}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"verify": {"variants": ["thm_x"]}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"solver": {"snapshot_count": 3}})"), ConfigError);
}

TEST(Config, MetaRecordsEveryTolerance) {
  const auto meta = meta_json(RunConfig{}, "verify");
  const auto& cfg = meta["config"];
  for (const char* k : {"tol_exponent", "tol_low_order", "tol_slope", "tol_decay", "noise_factor",
                        "scaling_tol_exact", "scaling_tol_quadrature"})
    EXPECT_TRUE(cfg["verify"].contains(k)) << k;
  for (const char* k : {"kernel_tol", "trace_tol", "mean_tol", "divergence_tol", "heat_tol", "flux_tol", "curl_tol",
                        "family_tol", "drift_tol", "j_stability_tol", "kernel_mass_floor"})
    EXPECT_TRUE(cfg["acceptance"].contains(k)) << k;
  EXPECT_TRUE(cfg["solver"].contains("boundary_floor"));
  EXPECT_TRUE(cfg["initial_data"].contains("moment_tolerance"));
  EXPECT_TRUE(cfg["expansion"].contains("tail_warning"));
  EXPECT_TRUE(meta["fixed_tolerances"].contains("rate_fit_min_points"));
}

TEST(Pipeline, TrajectoryRoundTripIsLossless) {
  const auto c = tiny();
  const Paths out{scratch("roundtrip")};
  const Log quiet(true);
  cmd_gen(c, out, quiet);
  const auto tr = cmd_solve(c, out, quiet);
  const auto back = read_trajectory(out.trajectory(), c);
  EXPECT_EQ(back.moments.times, tr.moments.times);
  EXPECT_EQ(back.moments.initial, tr.moments.initial);
  ASSERT_EQ(back.moments.flux.size(), tr.moments.flux.size());
  for (std::size_t k = 0; k < tr.moments.flux.size(); ++k) EXPECT_EQ(back.moments.flux[k], tr.moments.flux[k]);
  ASSERT_EQ(back.snapshots.size(), tr.snapshots.size());
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    EXPECT_EQ(back.snapshots[k].t, tr.snapshots[k].t);
    EXPECT_EQ(back.snapshots[k].omega.data, tr.snapshots[k].omega.data);
  }
  EXPECT_EQ(back.diagnostics.size(), tr.diagnostics.size());
  EXPECT_EQ(back.diagnostics.back().flux_abs, tr.diagnostics.back().flux_abs);
  EXPECT_EQ(slurp(out.trajectory() / "moments.csv").substr(0, 29), "t,l,beta1,beta2,component,val");
  fs::remove_all(out.root);
}

TEST(Pipeline, IdenticalConfigsGiveIdenticalCsv) {
  const auto c = tiny();
  const Log quiet(true);
  std::string first[3];
  for (int run = 0; run < 2; ++run) {
    const Paths out{scratch("determinism" + std::to_string(run))};
    cmd_gen(c, out, quiet);
    const auto tr = cmd_solve(c, out, quiet);
    const std::string files[3] = {"moments.csv", "flux.csv", "diagnostics.csv"};
    for (int k = 0; k < 3; ++k) {
      const auto s = slurp(out.trajectory() / files[k]);
      if (run == 0) first[k] = s;
      else EXPECT_EQ(s, first[k]) << files[k];
    }
    fs::remove_all(out.root);
  }
}

TEST(Pipeline, DownstreamStagesNeedTheirInputs) {
  const auto c = tiny();
  const Paths out{scratch("deps")};
  const Log quiet(true);
  EXPECT_THROW(cmd_solve(c, out, quiet), DependencyError);
  EXPECT_THROW(read_trajectory(out.trajectory(), c), DependencyError);
  EXPECT_THROW(require_terms(out), DependencyError);
}

TEST(Cli, VerifyWithoutTermsExitsWithMissingDependency) {
  const auto dir = scratch("cli");
  fs::create_directories(dir / "terms");
  const auto log = dir / "stderr.txt";
  const std::string cmd = std::string(NSFAR_CLI) + " verify --quiet --out " + dir.string() + " 2> " + log.string();
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(slurp(log).find("missing dependency"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, UnknownConfigKeyExitsWithExecutionError) {
  const auto dir = scratch("cli_bad");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"solver": {"t_max": 4, "colour": "blue"}})";
  }
  const auto log = dir / "stderr.txt";
  const std::string cmd = std::string(NSFAR_CLI) + " gen --config " + (dir / "bad.json").string() + " --out " +
                          dir.string() + " 2> " + log.string();
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(slurp(log).find("colour"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, EnvironmentOverridesOutputDirectoryOnly) {
  const auto dir = scratch("cli_env");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "cfg.json");
    f << to_json(tiny()).dump();
  }
  const std::string cmd = "NSFAR_OUT=" + (dir / "env").string() + " " + NSFAR_CLI + " gen --quiet --config " +
                          (dir / "cfg.json").string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "env" / "initial" / "omega0"));
  const auto meta = json::parse(slurp(dir / "env" / "initial" / "meta"));
  EXPECT_EQ(meta["config"]["grid"]["n"], 64);
  fs::remove_all(dir);
}
