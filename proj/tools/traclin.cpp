#include <CLI11.hpp>
#include <iostream>

#include "traclin/experiments.hpp"

using namespace traclin;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kLoads = 4 };

void report(const ScenarioResult& r, const std::vector<std::string>& paths) {
  for (const Check& c : r.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
  for (const auto& p : paths) std::cout << "wrote " << p << '\n';
}

ScenarioConfig read(const std::string& path, const std::string& out, int workers) {
  ScenarioConfig c = load_config(path);
  if (!out.empty()) c.out_dir = out;
  if (workers > 0) c.workers = workers;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearized incompressible elasticity with pure traction: scenarios and probes"};
  app.require_subcommand(1);

  std::string config, out;
  int workers = 0;
  auto* run = app.add_subcommand("run", "run the scenario in a config");
  run->add_option("--config", config, "scenario JSON")->required();
  run->add_option("--workers", workers, "parallel per-h solves");
  run->add_option("--out", out, "output directory (default: next to the config)");

  auto* loads = app.add_subcommand("check-loads", "equilibrium and compatibility of the configured loads");
  loads->add_option("--config", config, "scenario JSON")->required();
  loads->add_option("--out", out, "output directory");

  auto* flow = app.add_subcommand("flow", "flow recovery errors and bounds over h_list");
  flow->add_option("--config", config, "scenario JSON")->required();
  flow->add_option("--workers", workers, "threads over trajectories");
  flow->add_option("--out", out, "output directory");

  ProbeOptions probe_opt;
  auto* probe = app.add_subcommand("probe", "Korn and rigidity quotients for random fields");
  probe->add_option("--mesh-n", probe_opt.mesh_n, "elements per axis")->check(CLI::Range(2, 64));
  probe->add_option("--fields", probe_opt.fields, "number of random fields")->check(CLI::Range(50, 100000));
  probe->add_option("--seed", probe_opt.seed, "random seed");
  probe->add_option("--p", probe_opt.p, "growth exponent in (1, 2]");
  probe->add_option("--workers", probe_opt.workers, "threads");
  probe->add_option("--out", out, "output directory (default: current)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*run) {
      const ScenarioConfig c = read(config, out, workers);
      const ScenarioResult r = run_scenario(c);
      report(r, write_outputs(r, c));
    } else if (*loads) {
      ScenarioConfig c = read(config, out, 0);
      c.out_stem += "_loads";
      const ScenarioResult r = check_loads(c);
      report(r, write_outputs(r, c));
      if (!r.all_passed()) return kLoads;
    } else if (*flow) {
      ScenarioConfig c = read(config, out, workers);
      c.out_stem += "_flow";
      const ScenarioResult r = run_flow(c);
      report(r, write_outputs(r, c));
    } else if (*probe) {
      ScenarioConfig c;
      c.id = "custom";
      c.out_dir = out.empty() ? "." : out;
      c.out_stem = "probe_n" + std::to_string(probe_opt.mesh_n) + "_s" + std::to_string(probe_opt.seed);
      c.seed = probe_opt.seed;
      const ScenarioResult r = probe_inequalities(probe_opt);
      report(r, write_outputs(r, c));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const LoadConditionViolated& e) {
    std::cerr << "load condition violated: " << e.what() << '\n';
    return kLoads;
  } catch (const SolverNonconvergence& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const FlowExit& e) {
    std::cerr << "flow left the extended region: " << e.what() << '\n';
    return kSolver;
  }
  return kOk;
}
