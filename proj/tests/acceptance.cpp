// Runs the full pipeline on a config and prints one line per acceptance criterion.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nsfar/pipeline.hpp"

using namespace nsfar;

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string config, out = "acceptance_out";
  bool quiet = false;
  app.add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  app.add_flag("--quiet", quiet, "suppress progress output");
  CLI11_PARSE(app, argc, argv);
  try {
    RunConfig c = load_config(config);
    c.output_dir = out;
    set_threads(c.threads);
    const Log log(quiet);
    const Paths paths{c.output_dir};
    cmd_gen(c, paths, log);
    const auto tr = cmd_solve(c, paths, log);
    cmd_expand(c, tr, paths, log);
    const auto res = cmd_verify(c, tr, paths, log);
    bool ok = true;
    for (const auto& cr : res.criteria) {
      std::cout << criterion_line(cr) << '\n';
      ok = ok && cr.pass;
    }
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
