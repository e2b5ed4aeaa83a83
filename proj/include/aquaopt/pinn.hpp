#pragma once

// Physics-informed training of the value network on the free-boundary
// formulation, with three ways of producing the control:
//   1. closed-form feedback control from the value network's gradient,
//   2. a control network maximising the mean Hamiltonian,
//   3. a control network minimising its shortfall against a control grid.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "aquaopt/fd_hjb.hpp"
#include "aquaopt/model.hpp"
#include "aquaopt/nn.hpp"
#include "aquaopt/payoff.hpp"

namespace aquaopt {

/// Input order of every network here: (t, w, h, pF, pB).
enum Input : std::size_t { kT = 0, kW = 1, kH = 2, kPF = 3, kPB = 4 };

/// Uniform sampling box for (t, w, h, pF, pB).
struct SamplingBox {
  std::array<double, 5> lo{}, hi{};

  /// t in [0, T], state bounds from the grid.
  static SamplingBox from_grid(const GridSpec& grid, const ModelParams& p);
};

enum class ControlApproach { Feedback = 1, MeanHamiltonian = 2, GridShortfall = 3 };

struct PinnConfig {
  std::size_t batch = 4096;  // per region
  std::size_t epochs = 10000;
  double fuzzy_eps = 0.01;
  std::size_t control_inner_steps = 5;
  double control_lr = 5e-4;
  std::size_t control_grid = 64;  // m, approach 3
  double stop_eps = 0.01;
  double lr0 = 5e-3;
  std::vector<std::size_t> hidden{32, 32, 32};
  /// Candidates drawn per rejection round and the cap on rounds per epoch.
  std::size_t pool = 8192;
  std::size_t max_rounds = 8;
  /// Minimise the literal -(y_hat - y)^+ instead of the shortfall.
  bool literal_hinge = false;
  /// Boundary batch takes V - g < eps U (everything below the obstacle plus
  /// the fuzzy band). With false it takes |V - g| < eps U, which leaves any
  /// V below g unpenalised away from the band.
  bool one_sided_boundary = true;
  std::size_t divergence_epoch = 10;
  double divergence_factor = 1e3;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument on invalid settings.
  void validate() const;
};

/// Value and the derivatives entering the generator.
struct Derivatives {
  double V = 0, Vt = 0, Vw = 0, Vh = 0, VF = 0, VB = 0, VFF = 0, VBB = 0;
};

/// Maximiser over [0, f_t] of the controlled part of the Hamiltonian,
///   -(f-u)^2 (gammaF s(w) V_w + muF h V_h) - c(t) h pF u.
/// With D = gammaF s(w) V_w + muF h V_h > delta the stationary point
/// u = f - c(t) h pF / (2 D) is clamped to [0, f_t]; otherwise the better
/// endpoint of {0, f_t} is returned (ties to 0).
double feedback_control(double Vw, double Vh, double t, double w, double h, double pF, double pB,
                        const ModelParams& p, const FeedingStrategy& s, double delta = 1e-8);

/// dV/dt + L^u V - rV + c(t) k(t, x, u).
double pde_residual(const ModelParams& p, const FeedingStrategy& s, double t, double w, double h, double pF,
                    double pB, const Derivatives& d, double u);

/// L^u V + c(t) k(t, x, u) without the u-independent time and discount terms;
/// differences across u equal differences of the residual.
double hamiltonian(const ModelParams& p, const FeedingStrategy& s, double t, double w, double h, double pF,
                   double pB, const Derivatives& d, double u);

/// d hamiltonian / du.
double hamiltonian_du(const ModelParams& p, const FeedingStrategy& s, double t, double w, double h, double pF,
                      double pB, const Derivatives& d, double u);

struct SamplingDiagnostics {
  std::size_t epoch = 0;
  std::size_t rounds = 0;
  std::size_t drawn = 0;
  std::size_t continuation = 0;
  std::size_t boundary = 0;
  bool starved = false;
  double continuation_rate() const { return drawn ? double(continuation) / double(drawn) : 0.0; }
  double boundary_rate() const { return drawn ? double(boundary) / double(drawn) : 0.0; }
};

struct SampledRegions {
  InputBatch continuation, boundary, terminal;
  SamplingDiagnostics diag;
};

/// Rejection sampling from the box: continuation points have V > g,
/// boundary points |V - g| < eps U with a fresh U ~ U(0, 1) per point, and
/// terminal points are uniform in space at t = T. Rounds stop once both
/// batches are full or the cap is reached; a capped run returns the partial
/// batches with diag.starved set.
SampledRegions sample_regions(const Mlp& value_net, const SamplingBox& box, const PinnConfig& cfg,
                              std::mt19937_64& rng);

/// Pointwise derivatives from a tape with gradient and (pF, pB) Hessian channels.
Derivatives derivatives_at(const Tape& tape, std::size_t i);

/// Controls used in the residual: feedback from the value network or the
/// output of a control network (clamped to uBar).
struct ControlSource {
  const Mlp* control_net = nullptr;
};

std::vector<double> pde_residual(const Mlp& value_net, const ControlSource& control, const InputBatch& batch,
                                 const ModelParams& p, const FeedingStrategy& s);

/// mean over the batch of -hamiltonian at the control network's output.
double control_loss_me(const Mlp& value_net, const Mlp& control_net, const InputBatch& batch,
                       const ModelParams& p, const FeedingStrategy& s);

/// mean (y_hat - y)^+ with y_hat = max_j hamiltonian(u_j) over the grid and
/// y = hamiltonian(control network); the literal flag returns the negated mean.
double control_loss_hinge(const Mlp& value_net, const Mlp& control_net, const InputBatch& batch,
                          std::span<const double> u_grid, const ModelParams& p, const FeedingStrategy& s,
                          bool literal = false);

struct LossRecord {
  std::size_t epoch;
  double lr, pde, fb, terminal, control;
};

struct PinnResult {
  Mlp value;
  std::optional<Mlp> control;
  std::vector<LossRecord> history;
  std::vector<SamplingDiagnostics> sampling;
};

/// L_PDE (continuation), L_FB (boundary) and L_T (terminal) on sampled
/// regions; adds d(L_PDE + L_FB + L_T)/d params of the value network to
/// grad. Controls are held fixed in the derivative; for the feedback control
/// this is the exact gradient wherever the control is interior or clamped,
/// since the Hamiltonian is stationary in u there or u is locally constant.
LossRecord value_loss(const Mlp& value_net, const ControlSource& control, const SampledRegions& regions,
                      const ModelParams& p, const FeedingStrategy& s, std::span<double> grad);

/// Trains the value network (and the control network for approaches 2, 3).
/// Throws std::runtime_error when the loss diverges or becomes non-finite.
PinnResult train_value(const PinnConfig& cfg, ControlApproach approach, const SamplingBox& box,
                       const ModelParams& p, const FeedingStrategy& s);

/// CSV epoch,lr,L_PDE,L_FB,L_T,L_ctrl.
void write_loss_history_csv(const std::vector<LossRecord>& history, std::ostream& out);
/// CSV epoch,rounds,drawn,continuation,boundary,continuation_rate,boundary_rate,starved.
void write_sampling_csv(const std::vector<SamplingDiagnostics>& diag, std::ostream& out);

/// Feedback control from the value network's (w, h) gradient.
class PinnFeedbackPolicy final : public ControlPolicy {
 public:
  PinnFeedbackPolicy(const Mlp& value_net, ModelParams p, FeedingStrategy s)
      : net_(&value_net), p_(p), s_(std::move(s)) {}
  void controls(std::size_t step, double t, const StateView& x, std::span<double> u) const override;

 private:
  const Mlp* net_;
  ModelParams p_;
  FeedingStrategy s_;
};

/// Control network output clamped to [0, uBar].
class ControlNetPolicy final : public ControlPolicy {
 public:
  ControlNetPolicy(const Mlp& control_net, double uBar) : net_(&control_net), uBar_(uBar) {}
  void controls(std::size_t step, double t, const StateView& x, std::span<double> u) const override;

 private:
  const Mlp* net_;
  double uBar_;
};

/// Harvest at the first grid time with V(t, x) <= g(t, x) + eps.
class ThresholdStop final : public StoppingRule {
 public:
  ThresholdStop(const Mlp& value_net, double eps) : net_(&value_net), eps_(eps) {}
  void decide(std::size_t step, double t, const StateView& x, std::span<std::uint8_t> stop) const override;

 private:
  const Mlp* net_;
  double eps_;
};

ThresholdStop threshold_stopping(const Mlp& value_net, double eps_stop);

/// Batch of network inputs from a time and a state view.
InputBatch make_inputs(double t, const StateView& x);

}  // namespace aquaopt
