#pragma once

// Toy aquaculture model: constants, biological feeding schedules, the
// controlled weight/population drifts and the two risk-neutral price GBMs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace aquaopt {

/// Weight growth law. Richards: (gamma - gammaF (f-u)^2) w (1 - (w/wInf)^nu),
/// which reproduces the reported benchmark harvest time. Affine drops the
/// leading w factor.
enum class GrowthLaw { Richards, Affine };

/// How the running feeding cost enters the farm value. Discounted applies
/// e^{-rt} to the cost rate; Undiscounted charges the nominal cost, which
/// inside the discounted functional is a cost factor c(t) = e^{rt}.
enum class CostConvention { Discounted, Undiscounted };

struct LinearFeeding {
  double f0 = 0.1;
  double eta = 0.3;
};

struct ExponentialFeeding {
  double f0 = 0.1;
  double lambda = 0.0;
};

struct LogisticFeeding {
  double f0 = 0.1;
  double L = 1.0;
  double k = 2.5;
  double tI = 1.5;
};

struct SinusoidalFeeding {
  double f0 = 0.1;
  double a = 0.1;
  double tp = 0.25;
  double b = 0.0;
};

/// Deterministic biological feeding rate f_t.
class FeedingStrategy {
 public:
  using Variant = std::variant<LinearFeeding, ExponentialFeeding, LogisticFeeding, SinusoidalFeeding>;

  FeedingStrategy() = default;
  explicit FeedingStrategy(Variant v) : v_(v) {}

  static FeedingStrategy linear(double f0, double eta) { return FeedingStrategy(LinearFeeding{f0, eta}); }
  /// f0 e^{lambda t} normalised so that f_T = 1.
  static FeedingStrategy normalized_exponential(double f0, double T);
  /// L = 1, k = 2.5, inflection at T/2.
  static FeedingStrategy default_logistic(double f0, double T);
  /// a = 0.1, period T/12, drift chosen so that a + bT + f0 = 1.
  static FeedingStrategy normalized_sinusoidal(double f0, double T);

  double rate(double t) const;
  /// Short tag: linear, exponential, logistic or sinusoidal.
  std::string kind() const;
  const Variant& variant() const { return v_; }

 private:
  Variant v_{LinearFeeding{}};
};

inline double feeding_rate(const FeedingStrategy& s, double t) { return s.rate(t); }

struct ModelParams {
  double h0 = 1.0;
  double w0 = 0.01;
  double pF0 = 0.075;
  double pB0 = 0.1;
  double mu = 0.1;
  double muF = 3.0;
  double gamma = 5.0;
  double gammaF = 10.0;
  double wInf = 3.0;
  double nu = 0.75;
  double r = 0.01;
  double sigmaF = 0.25;
  double sigmaB = 0.1;
  double T = 3.0;
  double uBar = 1.0;
  GrowthLaw growth = GrowthLaw::Richards;
  CostConvention cost_convention = CostConvention::Undiscounted;

  /// Throws std::invalid_argument on violated parameter invariants,
  /// including uBar < sup f_t on [0, T].
  void validate(const FeedingStrategy& s) const;

  /// Copy with h0 = 1; values computed with it scale linearly by h0.
  ModelParams normalized() const;

  /// w-dependent factor of the weight drift: w^k (1 - (w/wInf)^nu).
  double growth_shape(double w) const;

  /// Multiplier of the feed price in the running cost at time t.
  double cost_factor(double t) const;
};

double weight_drift(double t, double w, double f, double u, const ModelParams& p);
double population_drift(double t, double h, double f, double u, const ModelParams& p);

/// One explicit Euler step of (w, h) under feeding f and control u. Steps
/// that overshoot are clamped: w stays in (0, wInf] (when it started there)
/// and h in (0, h_prev].
void euler_step(const ModelParams& p, double f, double u, double dt, double& w, double& h);

/// Control as a function of (t, w, h, pF, pB).
using PointPolicy = std::function<double(double t, double w, double h, double pF, double pB)>;

struct Trajectory {
  std::vector<double> t, w, h;
};

/// Prices sampled on the integration grid (index k at time k dt).
struct PricePathView {
  std::span<const double> pF;
  std::span<const double> pB;
};

/// Explicit Euler trajectory of (w, h) from (w0, h0). Without a price path
/// the policy receives NaN prices, so a policy that reads them fails the
/// finiteness check. Throws std::domain_error on non-finite policy output.
Trajectory integrate_deterministic(const ModelParams& p, const FeedingStrategy& s, const PointPolicy& u_policy,
                                   double dt, double horizon, const PricePathView* prices = nullptr);

/// argmax over the dt-grid of h_t w_t under u = f (first maximiser).
double biomass_peak_time(const FeedingStrategy& s, const ModelParams& p, double dt);

/// Shared Monte-Carlo price scenarios. Arrays are step-major:
/// value(step, path) = pF[step * n_paths + path], steps 0..n_steps.
struct PathBatch {
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> pF, pB;
  /// Standard normal draws per step (steps 0..n_steps-1); empty unless kept.
  std::vector<double> zF, zB;

  double time(std::size_t step) const { return static_cast<double>(step) * dt; }
  double feed_price(std::size_t step, std::size_t path) const { return pF[step * n_paths + path]; }
  double biomass_price(std::size_t step, std::size_t path) const { return pB[step * n_paths + path]; }
};

/// Exact log-space GBM. Path i draws from its own generator seeded by a
/// hash of (seed, i), so results do not depend on evaluation order.
PathBatch simulate_price_paths(const ModelParams& p, std::size_t n_paths, std::size_t n_steps,
                               std::uint64_t seed, bool keep_increments = false);

/// CSV with header path_id,step,t,pF,pB.
void write_paths_csv(const PathBatch& paths, std::ostream& out);

/// splitmix64 mixing used for all derived seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace aquaopt
