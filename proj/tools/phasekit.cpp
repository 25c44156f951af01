#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "phasekit/runner.hpp"

using namespace phasekit;

int main(int argc, char** argv) {
  CLI::App app{"Stationary-phase evaluation and verification of oscillatory integrals"};
  app.require_subcommand(1);
  std::string config, out;
  int nmax = -1, threads = 0;
  double tol = 0;
  long long seed = -1;
  for (const char* name : {"oracle", "eval", "compare", "inert-check", "example-ci"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (default: the config's output.dir)");
    sub->add_option("--nmax", nmax, "number of correction terms");
    sub->add_option("--tol", tol, "oracle tolerance");
    sub->add_option("--seed", seed, "sampling seed");
    sub->add_option("--threads", threads, "worker threads (0: PHASEKIT_THREADS or all cores)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  std::string mode = app.get_subcommands().front()->get_name();
  try {
    std::ifstream in(config);
    std::stringstream text;
    text << in.rdbuf();
    RunConfig cfg = parse_config(text.str());
    if (to_string(cfg.mode) != mode) {
      std::cerr << "config mode '" << to_string(cfg.mode) << "' does not match subcommand '" << mode << "'\n";
      return 2;
    }
    if (nmax >= 0) cfg.n_max = nmax;
    if (tol > 0) cfg.tol = tol;
    if (seed >= 0) cfg.seed = static_cast<unsigned long long>(seed);
    if (!out.empty()) cfg.out_dir = out;
    if (threads > 0) set_thread_count(threads);
    Report rep = run_config(cfg);
    rep.write(cfg.out_dir, cfg.sweep_csv);
    std::cout << rep.text();
    return rep.pass() ? 0 : 1;
  } catch (const SchemaError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const ExprParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const UnboundParameter& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
