#pragma once

// Explicit upwind finite-difference solver for the HJB variational
// inequality on the (t, w, h, pF, pB) grid with a discrete control set.
//
// Node layout everywhere: ((iw * nh + ih) * nF + iF) * nB + iB, i.e. w is
// the slowest and pB the fastest dimension. Retained slices are stored
// time-major on top of that.
//
// Boundary faces use linear-extrapolation ghost nodes: the first difference
// that would leave the grid is replaced by the inward one-sided difference
// and the second difference vanishes.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aquaopt/model.hpp"
#include "aquaopt/payoff.hpp"

namespace aquaopt {

struct AxisSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 2;

  double step() const { return (hi - lo) / static_cast<double>(n - 1); }
  double node(std::size_t i) const { return lo + static_cast<double>(i) * step(); }
};

struct GridSpec {
  std::size_t n_time = 2048;  // time steps on [0, T]
  AxisSpec w, h, pF, pB;
  AxisSpec u{0.0, 1.0, 64};

  /// Full-size grid: 2048 steps, 64 x 64 x 32 x 32 nodes, 64 controls.
  static GridSpec paper(const ModelParams& p);
  /// Same box at 512 steps, 32 x 32 x 16 x 16 nodes, 32 controls.
  static GridSpec desk(const ModelParams& p);

  /// Throws std::invalid_argument unless bounds are ordered, counts >= 2
  /// and the control count fits the stored policy index (<= 256).
  void validate() const;
  std::size_t n_nodes() const { return w.n * h.n * pF.n * pB.n; }
  double dt(const ModelParams& p) const { return p.T / static_cast<double>(n_time); }
  std::size_t node_index(std::size_t iw, std::size_t ih, std::size_t iF, std::size_t iB) const {
    return ((iw * h.n + ih) * pF.n + iF) * pB.n + iB;
  }
};

enum class FdMode { VariationalInequality, ControlOnly };

struct StabilityReport {
  bool ok = true;
  /// Smallest diagonal stencil coefficient over nodes, controls and times.
  double min_diagonal = 1.0;
  std::size_t worst_time = 0, worst_control = 0;
  std::array<std::size_t, 4> worst_node{};
  /// Largest time step for which every diagonal coefficient is >= 0.
  double max_stable_dt = 0.0;
  std::string message() const;
};

/// Sweeps the diagonal coefficient 1 - dt sum |b_i|/d_i - dt sum sigma_i^2/d_i^2
/// over the grid. The coefficient is a sum of terms that each depend on one
/// coordinate (times a (t, u) factor), so the worst node is found per axis.
StabilityReport stability_check(const GridSpec& grid, const ModelParams& p, const FeedingStrategy& s);

/// Stencil weights at an interior node, ordered
/// {centre, w+, w-, h+, h-, pF+, pF-, pB+, pB-}, before the (1 - r dt) discount.
std::array<double, 9> stencil_weights(const GridSpec& grid, const ModelParams& p, const FeedingStrategy& s,
                                      std::size_t time_index, std::array<std::size_t, 4> node, double u);

/// Value array over all spatial nodes at one time index.
struct ValueField {
  std::size_t time_index = 0;
  std::vector<double> v;
};

/// Reusable per-grid state for explicit backward steps.
class HjbStepper {
 public:
  HjbStepper(const GridSpec& grid, const ModelParams& p, const FeedingStrategy& s);

  /// One backward step from V(t_{n+1}) to V(t_n). Writes the maximising
  /// control index per node to `arg`. Throws std::domain_error if a value
  /// becomes non-finite.
  void step(std::span<const double> v_next, std::size_t n, FdMode mode, std::span<double> v_now,
            std::span<std::uint8_t> arg);

  /// g = w h pB at every node.
  std::span<const double> obstacle() const { return g_; }
  const GridSpec& grid() const { return grid_; }

 private:
  GridSpec grid_;
  ModelParams p_;
  FeedingStrategy s_;
  double dt_;
  std::vector<double> controls_;
  std::vector<double> shape_, h_, hpf_, g_;
  std::vector<double> base_, dwp_, dwm_, dh_;
  std::vector<double> growth_, mortality_, cost_;
};

struct StepResult {
  ValueField value;
  std::vector<std::uint8_t> policy;
};

StepResult step_backward(const ValueField& v_next, std::size_t n, const GridSpec& grid, const ModelParams& p,
                         const FeedingStrategy& s, FdMode mode);

struct SolveOptions {
  FdMode mode = FdMode::VariationalInequality;
  /// Solved horizon; rounded to the nearest multiple of dt (<= T).
  double horizon = -1.0;  // < 0 means T
  std::size_t policy_stride = 16;
  bool allow_unstable = false;
  /// Called after every time level with (time index, V).
  std::function<void(std::size_t, std::span<const double>)> observer;
};

/// Backward solution with retained value/policy slices.
struct FdSolution {
  GridSpec grid;
  FdMode mode = FdMode::VariationalInequality;
  double dt = 0.0;
  std::size_t horizon_steps = 0;
  std::size_t stride = 16;
  std::vector<double> controls;
  /// Retained time indices: 0, stride, 2 stride, ... and horizon_steps.
  std::vector<std::size_t> slice_steps;
  /// slice-major values (float) and control indices.
  std::vector<float> values;
  std::vector<std::uint8_t> policy;
  std::vector<double> value0;
  double v0_at_x0 = 0.0;

  double horizon() const { return dt * static_cast<double>(horizon_steps); }
  /// Multilinear in space (clamped to the box), linear in t between slices.
  double interpolate_value(double t, double w, double h, double pF, double pB) const;
  double interpolate_policy(double t, double w, double h, double pF, double pB) const;
  /// Value at t = 0 from the double-precision slice.
  double interpolate_value0(double w, double h, double pF, double pB) const;
};

FdSolution solve(const GridSpec& grid, const ModelParams& p, const FeedingStrategy& s, const SolveOptions& options);

/// Control from the interpolated policy field, clamped to [0, uBar].
class FdPolicy final : public ControlPolicy {
 public:
  FdPolicy(const FdSolution& sol, double uBar) : sol_(&sol), uBar_(uBar) {}
  void controls(std::size_t step, double t, const StateView& x, std::span<double> u) const override;

 private:
  const FdSolution* sol_;
  double uBar_;
};

/// Harvest at the first grid time with V(t, x) <= g(t, x) + tolerance;
/// always harvests at the solution's horizon.
class FdValueStop final : public StoppingRule {
 public:
  FdValueStop(const FdSolution& sol, double tolerance, double T) : sol_(&sol), tol_(tolerance), T_(T) {}
  void decide(std::size_t step, double t, const StateView& x, std::span<std::uint8_t> stop) const override;
  std::size_t latest_step(std::size_t n_steps) const override;

 private:
  const FdSolution* sol_;
  double tol_;
  double T_;
};

FdValueStop stopping_rule_from_value(const FdSolution& sol, double tolerance, double T);

/// Binary dump. Layout (little-endian):
///   "AQFDSOL1" | u64 n_time, nw, nh, nF, nB, nu, mode, horizon_steps, stride, n_slices
///   | f64 bounds (w, h, pF, pB, u: lo, hi) | f64 dt, v0_at_x0
///   | u64 slice_steps[n_slices] | f64 value0[nodes]
///   | f32 values[n_slices * nodes] | u8 policy[n_slices * nodes]
void write_solution(const FdSolution& sol, std::ostream& out);
FdSolution read_solution(std::istream& in);

/// CSV w,h,pF,pB,V of the t = 0 slice.
void write_value0_csv(const FdSolution& sol, std::ostream& out);

}  // namespace aquaopt
