// Command-line front end: path simulation, FD solves, network training,
// learned stopping, scenario evaluation and table reproduction.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aquaopt/config.hpp"
#include "aquaopt/experiments.hpp"

using namespace aquaopt;

namespace {

struct GlobalOptions {
  std::string config;
  std::string preset;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool no_cache = false;
};

ExperimentConfig resolve_config(const GlobalOptions& g, CLI::App& app) {
  std::string preset = g.preset;
  if (preset.empty() && !g.config.empty()) preset = config_file_preset(g.config);
  if (preset.empty()) preset = "desk";
  ExperimentConfig cfg = ExperimentConfig::preset_config(preset);
  if (!g.config.empty()) cfg = load_config_file(g.config, cfg);
  if (app.count("--seed")) cfg.run.seed = g.seed;
  if (app.count("--out-dir")) cfg.run.out_dir = g.out_dir;
  if (app.count("--threads")) cfg.run.threads = g.threads;
  cfg.validate();
  return cfg;
}

std::string save_text(Experiment& ex, const std::string& name, const std::string& text) {
  write_file_atomic(ex.out_path(name), text);
  return name;
}

std::string save_report(Experiment& ex, const std::string& name, const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  write_report_csv(rows, out);
  std::cout << out.str();
  return save_text(ex, name, out.str());
}

ControlApproach parse_approach(int a) {
  if (a < 1 || a > 3) throw std::invalid_argument("approach must be 1, 2 or 3");
  return static_cast<ControlApproach>(a);
}

// DeepOS control names mapped to the scenarios that use them.
std::string deepos_scenario(const std::string& control) {
  if (control == "uf") return "bench-uf-tau2";
  if (control == "u0") return "bench-u0-tau2";
  if (control == "fd-hat") return "fd-3";
  if (control == "fd-tilde") return "fd-5";
  if (control == "pinn-1" || control == "pinn-2" || control == "pinn-3") return "pinn-deepos-" + control.substr(5);
  throw std::invalid_argument("unknown control '" + control + "' (uf, u0, fd-hat, fd-tilde, pinn-1..3)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint optimal feeding and harvesting for a toy fish farm"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--preset", g.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--seed", g.seed, "seed of the shared price paths");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--no-cache", g.no_cache, "recompute cached solutions and networks");

  std::size_t sim_paths = 0, sim_steps = 0;
  auto* sim = app.add_subcommand("simulate-paths", "write the shared price paths as CSV");
  sim->add_option("--n-paths", sim_paths, "override run.n_paths");
  sim->add_option("--n-steps", sim_steps, "override run.n_steps");

  std::string fd_mode = "vi", fd_horizon = "T";
  auto* fd = app.add_subcommand("fd-solve", "solve the HJB problem on the grid");
  fd->add_option("--mode", fd_mode, "vi or control")->check(CLI::IsMember({"vi", "control"}));
  fd->add_option("--horizon", fd_horizon, "T, tau1 or a time");

  int approach = 1;
  auto* pinn = app.add_subcommand("pinn-train", "train the value network (and control network)");
  pinn->add_option("--approach", approach, "1 feedback, 2 mean Hamiltonian, 3 grid shortfall");

  std::string control = "uf";
  auto* dos = app.add_subcommand("deepos-train", "train a learned stopping rule for a control");
  dos->add_option("--control", control, "uf, u0, fd-hat, fd-tilde, pinn-1, pinn-2 or pinn-3");

  std::vector<std::string> scenarios;
  auto* eval = app.add_subcommand("evaluate", "evaluate scenarios on the shared paths");
  eval->add_option("--scenario", scenarios, "scenario ids")->required();

  int table = 0;
  auto* rep = app.add_subcommand("reproduce", "reproduce a result table");
  rep->add_option("--table", table, "table number")->required()->check(CLI::IsMember({2, 4, 5, 6, 7, 8, 9}));

  std::string traj_scenario;
  std::vector<std::size_t> traj_paths;
  auto* traj = app.add_subcommand("trajectory", "write per-path trajectories of a scenario");
  traj->add_option("--scenario", traj_scenario, "scenario id")->required();
  traj->add_option("--path", traj_paths, "path indices (default run.trajectory_paths)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig cfg = resolve_config(g, app);
    if (*sim) {
      if (sim_paths) cfg.run.n_paths = sim_paths;
      if (sim_steps) cfg.run.n_steps = sim_steps;
    }
    Experiment ex(cfg, !g.no_cache);
    std::vector<std::string> outputs;

    if (*sim) {
      std::ostringstream out;
      write_paths_csv(ex.paths(), out);
      outputs.push_back(save_text(ex, "paths.csv", out.str()));
    } else if (*fd) {
      const ModelParams& p = ex.params();
      double horizon = p.T;
      if (fd_horizon == "tau1") horizon = ex.tau1();
      else if (fd_horizon != "T") horizon = std::stod(fd_horizon);
      const StabilityReport st = stability_check(cfg.grid, p, cfg.feeding);
      std::cout << st.message() << "\n";
      if (!st.ok && !cfg.allow_unstable) {
        std::cerr << "error: grid fails the stability check\n";
        return 2;
      }
      const FdMode mode = fd_mode == "vi" ? FdMode::VariationalInequality : FdMode::ControlOnly;
      const FdSolution& sol = ex.fd_solution(mode, horizon);
      std::cout << "V(0, x0) = " << sol.v0_at_x0 * ex.scale() << "\n";
      std::ostringstream bin, csv;
      write_solution(sol, bin);
      write_value0_csv(sol, csv);
      outputs.push_back(save_text(ex, "fd_solution_" + fd_mode + ".bin", bin.str()));
      outputs.push_back(save_text(ex, "fd_value0_" + fd_mode + ".csv", csv.str()));
    } else if (*pinn) {
      const ControlApproach a = parse_approach(approach);
      const PinnResult& res = ex.pinn(a);
      const std::string tag = std::to_string(approach);
      std::ostringstream hist, samp, value, ctrl;
      write_loss_history_csv(res.history, hist);
      write_sampling_csv(res.sampling, samp);
      save_checkpoint(res.value, value);
      outputs.push_back(save_text(ex, "pinn" + tag + "_loss.csv", hist.str()));
      outputs.push_back(save_text(ex, "pinn" + tag + "_sampling.csv", samp.str()));
      outputs.push_back(save_text(ex, "pinn" + tag + "_value.ckpt", value.str()));
      if (res.control) {
        save_checkpoint(*res.control, ctrl);
        outputs.push_back(save_text(ex, "pinn" + tag + "_control.ckpt", ctrl.str()));
      }
      outputs.push_back(save_report(ex, "pinn" + tag + "_report.csv", {ex.row("pinn-" + tag)}));
    } else if (*dos) {
      const std::string id = deepos_scenario(control);
      const Strategy s = ex.strategy(id);
      const auto& rule = dynamic_cast<const DeepOsRule&>(*s.rule);
      std::ostringstream bin;
      save_rule(rule, bin);
      outputs.push_back(save_text(ex, "deepos_" + control + ".bin", bin.str()));
      const FixedTimeScan scan = fixed_time_scan(record_states(ex.paths(), *s.policy, ex.params(), ex.feeding(),
                                                               cfg.deepos.stride, rule.latest_step(cfg.run.n_steps)));
      std::ostringstream sc;
      sc << "t,J_mean,J_stderr\n";
      char buf[96];
      for (std::size_t i = 0; i < scan.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", scan.times[i], scan.mean[i] * ex.scale(),
                      scan.stderr_[i] * ex.scale());
        sc << buf;
      }
      outputs.push_back(save_text(ex, "deepos_" + control + "_fixed_times.csv", sc.str()));
      ReportRow r = ex.row(id);
      r.scenario = "deepos-" + control;
      outputs.push_back(save_report(ex, "deepos_" + control + "_report.csv", {r}));
    } else if (*eval) {
      std::vector<ReportRow> rows;
      for (const auto& id : scenarios) rows.push_back(ex.row(id));
      outputs.push_back(save_report(ex, "evaluation.csv", rows));
    } else if (*rep) {
      std::vector<ReportRow> rows;
      switch (table) {
        case 2: rows = run_benchmarks(ex); break;
        case 4: rows = run_fd_scenarios(ex); break;
        case 5: rows = run_pinn_tables(ex, true, false); break;
        case 6: rows = run_pinn_tables(ex, false, true); break;
        case 7: rows = run_appendix(cfg, "efr", !g.no_cache); break;
        case 8: rows = run_appendix(cfg, "lfr", !g.no_cache); break;
        case 9: rows = run_appendix(cfg, "sfr", !g.no_cache); break;
        default: throw std::invalid_argument("unsupported table");
      }
      outputs.push_back(save_report(ex, "table" + std::to_string(table) + ".csv", rows));
    } else if (*traj) {
      if (traj_paths.empty()) traj_paths = cfg.run.trajectory_paths;
      for (const auto& f : emit_trajectory(ex, traj_scenario, traj_paths)) outputs.push_back(f);
    }

    std::vector<std::string> command(argv, argv + argc);
    write_manifest(cfg, command, outputs);
    for (const auto& f : outputs) std::cerr << "wrote " << ex.out_path(f) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
