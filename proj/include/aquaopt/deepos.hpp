#pragma once

// Deep optimal stopping for a fixed control policy: one small network per
// decision time, trained backward in time on simulated paths to decide
// between harvesting now and the payoff realised by the later decisions.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "aquaopt/model.hpp"
#include "aquaopt/nn.hpp"
#include "aquaopt/payoff.hpp"

namespace aquaopt {

struct DeepOsConfig {
  std::size_t stride = 16;  // path steps between decisions
  std::vector<std::size_t> hidden{32, 32};
  std::size_t steps_per_decision = 500;
  double lr = 1e-3;
  std::size_t batch = 4096;
  std::uint64_t seed = 7;
  /// Start each decision's network from the later decision's weights.
  bool warm_start = false;
  /// Evaluate on the training paths instead of a fresh batch.
  bool in_sample = false;
  std::size_t validation_paths = 8192;
  std::uint64_t validation_seed = 1001;

  void validate() const;
};

/// Networks take (t, w, h, pF, pB, g) with g = w h pB, standardised per
/// decision time through the input box.
class DeepOsRule final : public StoppingRule {
 public:
  DeepOsRule() = default;
  DeepOsRule(std::size_t n_steps, std::vector<std::size_t> decision_steps, std::vector<Mlp> nets);

  void decide(std::size_t step, double t, const StateView& x, std::span<std::uint8_t> stop) const override;
  std::size_t latest_step(std::size_t n_steps) const override;

  const std::vector<std::size_t>& decision_steps() const { return steps_; }
  const std::vector<Mlp>& nets() const { return nets_; }
  std::size_t n_steps() const { return n_steps_; }
  /// Stop probabilities of decision d's network.
  std::vector<double> probabilities(std::size_t d, double t, const StateView& x) const;

 private:
  std::size_t n_steps_ = 0;
  std::vector<std::size_t> steps_;
  std::vector<Mlp> nets_;  // one per decision except the last
};

struct DeepOsTraining {
  DeepOsRule rule;
  /// Mean realised in-sample value after each decision is trained, in
  /// training order (last decision first).
  std::vector<double> in_sample_value;
};

/// Backward recursion over the decision times 0, stride, ... up to
/// last_step (always a decision, always stopping).
DeepOsTraining train_deepos(const PathBatch& paths, const ControlPolicy& policy, const ModelParams& p,
                            const FeedingStrategy& s, const DeepOsConfig& cfg, std::size_t last_step);

struct FixedTimeScan {
  std::vector<double> times, mean, stderr_;
  std::size_t best = 0;
};

/// Value of harvesting every path at each decision time of the tape.
FixedTimeScan fixed_time_scan(const StateTape& tape);

struct DeepOsOutcome {
  EvaluationReport report;
  FixedTimeScan scan;
  /// Set when the learned rule's value is below the best fixed time.
  bool below_fixed_time = false;
  DeepOsTraining training;
};

/// Trains on `paths` and evaluates on a fresh batch (or in sample). The
/// fixed-time scan on the evaluation batch costs one more policy pass and
/// is skipped when `scan` is false.
DeepOsOutcome run_deepos(const PathBatch& paths, const ControlPolicy& policy, const ModelParams& p,
                         const FeedingStrategy& s, const DeepOsConfig& cfg, std::size_t last_step,
                         bool scan = true);

/// run_deepos for a trained network control.
DeepOsOutcome refine_pinn_stopping(const ControlPolicy& network_control, const PathBatch& paths,
                                   const ModelParams& p, const FeedingStrategy& s, const DeepOsConfig& cfg,
                                   bool scan = false);

/// Binary rule file: "AQDOS001" | u64 n_steps | u64 n_decisions |
/// u64 decision_steps[] | one network checkpoint per decision but the last.
void save_rule(const DeepOsRule& rule, std::ostream& out);
DeepOsRule load_rule(std::istream& in);

}  // namespace aquaopt
