#pragma once

// Scenario orchestration on a shared path batch: benchmarks, the six
// finite-difference scenarios, the network solver tables and the feeding
// variants. Expensive artifacts (FD solutions, trained networks, stopping
// rules) are cached on disk under <out_dir>/cache, keyed by a hash of the
// settings they depend on.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aquaopt/config.hpp"
#include "aquaopt/deepos.hpp"
#include "aquaopt/fd_hjb.hpp"
#include "aquaopt/payoff.hpp"
#include "aquaopt/pinn.hpp"

namespace aquaopt {

struct ReportRow {
  std::string scenario;
  double E_tau = 0.0;
  double J_mean = 0.0;
  double J_stderr = 0.0;
  std::optional<double> diff_vs_fd6;
};

ReportRow make_row(const std::string& scenario, const EvaluationReport& report,
                   std::optional<double> reference = std::nullopt);

/// CSV scenario,E_tau,J_mean,J_stderr,diff_vs_fd6 (empty diff when n/a).
void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out);

/// A control policy and a stopping rule with whatever they own.
struct Strategy {
  std::shared_ptr<const ControlPolicy> policy;
  std::shared_ptr<const StoppingRule> rule;
};

/// 64-bit FNV-1a, used for artifact keys.
std::uint64_t fnv1a(const std::string& text);

class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg, bool use_cache = true);

  const ExperimentConfig& config() const { return cfg_; }
  /// Model with h0 = 1; reported values are multiplied by h0.
  const ModelParams& params() const { return p_; }
  const FeedingStrategy& feeding() const { return cfg_.feeding; }
  double scale() const { return cfg_.model.h0; }

  /// Shared evaluation batch (run.seed).
  const PathBatch& paths();
  /// Independent batch for training stopping rules (the shared batch when
  /// deepos.in_sample is set).
  const PathBatch& training_paths();

  /// Harvest time of the biomass peak under u = f on the path grid.
  double tau1() const;
  std::size_t tau1_step() const;

  const FdSolution& fd_solution(FdMode mode, double horizon);
  const FdSolution& fd_vi() { return fd_solution(FdMode::VariationalInequality, p_.T); }
  const PinnResult& pinn(ControlApproach approach);
  /// Stopping rule for `policy` (identified by `policy_id` in the cache key).
  const DeepOsRule& deepos_rule(const std::string& policy_id, const ControlPolicy& policy, std::size_t last_step);

  /// Scenario ids: bench-{u0,uf}-tau{0,1,2}, fd-1 .. fd-6, pinn-1 .. pinn-3,
  /// pinn-deepos-1 .. pinn-deepos-3. Throws std::invalid_argument otherwise.
  Strategy strategy(const std::string& id);
  static std::vector<std::string> scenario_ids();

  /// Evaluates a scenario on the shared batch; values scaled by h0.
  EvaluationReport evaluate(const std::string& id, const std::vector<std::size_t>& record_paths = {});
  ReportRow row(const std::string& id, std::optional<double> reference = std::nullopt);

  std::string out_path(const std::string& name) const;

 private:
  std::string cache_path(const std::string& kind, const std::string& key) const;
  std::string settings_text(std::initializer_list<const char*> sections) const;

  ExperimentConfig cfg_;
  ModelParams p_;
  bool use_cache_;
  std::unique_ptr<PathBatch> paths_, training_paths_;
  std::map<std::string, std::unique_ptr<FdSolution>> fd_;
  std::map<int, std::unique_ptr<PinnResult>> pinn_;
  std::map<std::string, std::unique_ptr<DeepOsRule>> rules_;
};

/// {u = 0, u = f} x {tau0, tau1, tau2 (learned stopping)}.
std::vector<ReportRow> run_benchmarks(Experiment& ex);
/// Scenarios fd-1 .. fd-6.
std::vector<ReportRow> run_fd_scenarios(Experiment& ex);
/// Threshold-stopping rows (pinn-1..3) and learned-stopping rows
/// (pinn-deepos-1..3) with the difference to fd-6.
std::vector<ReportRow> run_pinn_tables(Experiment& ex, bool threshold, bool learned);
/// Feeding variant efr, lfr or sfr: benchmark (u = f, learned stopping),
/// FD joint solution and the three network controls with learned stopping.
std::vector<ReportRow> run_appendix(const ExperimentConfig& base, const std::string& variant, bool use_cache = true);

/// Config with the feeding strategy of an appendix variant.
ExperimentConfig appendix_config(const ExperimentConfig& base, const std::string& variant);

/// Writes trajectory_<id>_path<i>.csv for each path; returns the file names.
std::vector<std::string> emit_trajectory(Experiment& ex, const std::string& id, const std::vector<std::size_t>& paths);

/// Writes <out_dir>/manifest.json and <out_dir>/config.ini.
void write_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& command,
                    const std::vector<std::string>& outputs);

/// Writes `text` to path through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace aquaopt
