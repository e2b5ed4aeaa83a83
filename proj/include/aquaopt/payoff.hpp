#pragma once

// Cost, reward and the pathwise Monte-Carlo evaluator of the farm value
// J(0, x0; u, tau) on a shared PathBatch (common random numbers).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aquaopt/model.hpp"

namespace aquaopt {

/// Instantaneous cost k = -h u pF.
inline double running_cost(double /*t*/, double /*w*/, double h, double pF, double /*pB*/, double u) {
  return -h * u * pF;
}

/// Terminal reward g = w h pB.
inline double terminal_reward(double /*t*/, double w, double h, double /*pF*/, double pB) { return w * h * pB; }

/// Running cost including the convention factor c(t), see CostConvention.
inline double cost_rate(const ModelParams& p, double t, double h, double pF, double u) {
  return p.cost_factor(t) * running_cost(t, 0.0, h, pF, 0.0, u);
}

/// States of the paths still alive at one time step, structure of arrays.
struct StateView {
  std::span<const double> w, h, pF, pB;
  std::size_t size() const { return w.size(); }
};

/// Feedback control evaluated on a batch of states at one grid step.
class ControlPolicy {
 public:
  virtual ~ControlPolicy() = default;
  virtual void controls(std::size_t step, double t, const StateView& x, std::span<double> u) const = 0;
};

/// Harvest decision on a batch of states at one grid step; stop[i] = 1
/// harvests path i now.
class StoppingRule {
 public:
  virtual ~StoppingRule() = default;
  virtual void decide(std::size_t step, double t, const StateView& x, std::span<std::uint8_t> stop) const = 0;
  /// Latest step at which a path may still be running; the evaluator
  /// forces a stop at min(latest_step(n), n).
  virtual std::size_t latest_step(std::size_t n_steps) const { return n_steps; }
};

/// u = f_t.
class BiologicalFeedingPolicy final : public ControlPolicy {
 public:
  explicit BiologicalFeedingPolicy(FeedingStrategy s) : s_(std::move(s)) {}
  void controls(std::size_t, double t, const StateView& x, std::span<double> u) const override;

 private:
  FeedingStrategy s_;
};

class ConstantPolicy final : public ControlPolicy {
 public:
  explicit ConstantPolicy(double u) : u_(u) {}
  void controls(std::size_t, double, const StateView&, std::span<double> u) const override;

 private:
  double u_;
};

/// Adapts a pointwise control function.
class PointwisePolicy final : public ControlPolicy {
 public:
  explicit PointwisePolicy(PointPolicy f) : f_(std::move(f)) {}
  void controls(std::size_t, double t, const StateView& x, std::span<double> u) const override;

 private:
  PointPolicy f_;
};

/// Harvest at a fixed grid step (every path).
class FixedStepStop final : public StoppingRule {
 public:
  explicit FixedStepStop(std::size_t step) : step_(step) {}
  /// Nearest grid step to time tau on a grid of spacing dt.
  static FixedStepStop at_time(double tau, double dt);
  void decide(std::size_t step, double, const StateView&, std::span<std::uint8_t> stop) const override;
  std::size_t latest_step(std::size_t n_steps) const override { return step_ < n_steps ? step_ : n_steps; }
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Never harvests before the end of the grid.
class NoStop final : public StoppingRule {
 public:
  void decide(std::size_t, double, const StateView&, std::span<std::uint8_t> stop) const override;
};

struct TrajectoryRow {
  double t, w, h, pF, pB, u, value;
  bool stopped;
};

struct EvaluationReport {
  std::vector<double> per_path_value;
  std::vector<std::size_t> stop_step;
  double mean = 0.0;
  double stderr_ = 0.0;
  double mean_stopping_time = 0.0;
  /// Rows for the paths listed in EvaluationOptions::record_paths.
  std::map<std::size_t, std::vector<TrajectoryRow>> trajectories;

  /// Multiplies values by `factor` (h0 rescaling of normalised runs).
  void scale(double factor);
};

struct EvaluationOptions {
  std::vector<std::size_t> record_paths;
  /// Tolerance on the admissible control interval [0, uBar].
  double control_tolerance = 1e-12;
};

/// Per path: Euler-integrates (w, h) under the policy along the path's
/// prices, accumulates the left-Riemann discounted running cost until the
/// first step at which the rule fires and adds the discounted reward.
/// Throws std::domain_error on controls outside [0, uBar] or non-finite
/// states.
EvaluationReport evaluate_farm_value(const PathBatch& paths, const ControlPolicy& policy, const StoppingRule& rule,
                                     const ModelParams& p, const FeedingStrategy& s,
                                     const EvaluationOptions& options = {});

/// Controlled states recorded (without stopping) at decision steps
/// 0, stride, 2 stride, ... up to last_step (always included).
/// Arrays are decision-major: value(d, path) = w[d * n_paths + path].
struct StateTape {
  std::size_t n_paths = 0;
  std::vector<std::size_t> steps;
  std::vector<double> times;
  std::vector<double> w, h, pF, pB;
  /// Discounted running cost accumulated before the decision step.
  std::vector<double> cost;
  double r = 0.0;

  std::size_t n_decisions() const { return steps.size(); }
  std::size_t index(std::size_t d, std::size_t path) const { return d * n_paths + path; }
  /// Discounted value of harvesting path at decision d.
  double stop_value(std::size_t d, std::size_t path) const;
};

StateTape record_states(const PathBatch& paths, const ControlPolicy& policy, const ModelParams& p,
                        const FeedingStrategy& s, std::size_t stride, std::size_t last_step);

enum class BenchmarkControl { Zero, Biological };

/// Closed-form expectation E[J] for a price-independent control and fixed
/// harvest time: -pF0 int_0^tau c(t) h_t u_t dt + h_tau w_tau pB0, states
/// integrated by explicit Euler at dt = 1e-4.
double deterministic_benchmark_value(const FeedingStrategy& s, const ModelParams& p, BenchmarkControl u,
                                     double tau);

/// CSV with header t,w,h,pF,pB,u,value,stopped.
void write_trajectory_csv(const std::vector<TrajectoryRow>& rows, std::ostream& out);

}  // namespace aquaopt
