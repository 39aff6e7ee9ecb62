// Command-line front end: gen, solve, expand, verify, all.
//
// Exit codes: 0 success, 1 at least one claim failed, 2 execution error.
// NSFAR_OUT overrides the output directory (and nothing else); --out wins over both.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nsfar/pipeline.hpp"

using namespace nsfar;

namespace {

struct Options {
  std::string config;
  std::string out;
  int threads = -1;
  bool quiet = false;
};

int execute(const std::string& cmd, const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (const char* env = std::getenv("NSFAR_OUT"); env && *env) c.output_dir = env;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.threads >= 0) c.threads = o.threads;
  set_threads(c.threads);
  const Log log(o.quiet);
  const Paths paths{c.output_dir};

  if (cmd == "gen") {
    cmd_gen(c, paths, log);
    return 0;
  }
  if (cmd == "solve") {
    cmd_solve(c, paths, log);
    return 0;
  }
  if (cmd == "expand") {
    cmd_expand(c, read_trajectory(paths.trajectory(), c), paths, log);
    return 0;
  }
  VerifyResult res;
  if (cmd == "verify") {
    require_terms(paths);
    res = cmd_verify(c, read_trajectory(paths.trajectory(), c), paths, log);
  } else {
    cmd_gen(c, paths, log);
    const auto tr = cmd_solve(c, paths, log);
    cmd_expand(c, tr, paths, log);
    res = cmd_verify(c, tr, paths, log);
  }
  if (!o.quiet) {
    for (const auto& cr : res.criteria) std::cout << criterion_line(cr) << '\n';
    std::cout << "report: " << (paths.report() / "report.csv").string() << '\n';
  }
  return res.failed() ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Far-field and large-time expansions of 2D Navier-Stokes velocity"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory");
  app.add_option("--threads", o.threads, "worker threads (0 = hardware concurrency)");
  app.add_flag("--quiet", o.quiet, "suppress progress output");
  std::string cmd;
  for (const auto& [name, help] : {std::pair{"gen", "write the initial vorticity"},
                                   std::pair{"solve", "integrate and record the trajectory"},
                                   std::pair{"expand", "build expansion coefficients and term profiles"},
                                   std::pair{"verify", "run every claim check and write the report"},
                                   std::pair{"all", "gen, solve, expand and verify"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&cmd, n = std::string(name)] { cmd = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return execute(cmd, o);
  } catch (const DependencyError& e) {
    const std::string what = e.what();
    std::cerr << "error: " << (what.rfind("missing dependency", 0) == 0 ? "" : "missing dependency: ") << what
              << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
