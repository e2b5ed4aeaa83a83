#include "aquaopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include "aquaopt/parallel.hpp"

namespace aquaopt {

FeedingStrategy FeedingStrategy::normalized_exponential(double f0, double T) {
  return FeedingStrategy(ExponentialFeeding{f0, std::log(1.0 / f0) / T});
}

FeedingStrategy FeedingStrategy::default_logistic(double f0, double T) {
  return FeedingStrategy(LogisticFeeding{f0, 1.0, 2.5, T / 2.0});
}

FeedingStrategy FeedingStrategy::normalized_sinusoidal(double f0, double T) {
  const double a = 0.1;
  return FeedingStrategy(SinusoidalFeeding{f0, a, T / 12.0, (1.0 - a - f0) / T});
}

double FeedingStrategy::rate(double t) const {
  struct Visitor {
    double t;
    double operator()(const LinearFeeding& s) const { return s.f0 + s.eta * t; }
    double operator()(const ExponentialFeeding& s) const { return s.f0 * std::exp(s.lambda * t); }
    double operator()(const LogisticFeeding& s) const {
      return s.f0 + (s.L - s.f0) / (1.0 + std::exp(-s.k * (t - s.tI)));
    }
    double operator()(const SinusoidalFeeding& s) const {
      return s.a * std::sin(2.0 * std::numbers::pi * t / s.tp) + s.b * t + s.f0;
    }
  };
  return std::visit(Visitor{t}, v_);
}

std::string FeedingStrategy::kind() const {
  struct Visitor {
    std::string operator()(const LinearFeeding&) const { return "linear"; }
    std::string operator()(const ExponentialFeeding&) const { return "exponential"; }
    std::string operator()(const LogisticFeeding&) const { return "logistic"; }
    std::string operator()(const SinusoidalFeeding&) const { return "sinusoidal"; }
  };
  return std::visit(Visitor{}, v_);
}

void ModelParams::validate(const FeedingStrategy& s) const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid model parameters: ") + what);
  };
  require(h0 > 0 && w0 > 0 && pF0 > 0 && pB0 > 0, "initial state must be positive");
  require(mu >= 0 && muF >= 0 && gamma >= 0 && gammaF >= 0, "rates must be nonnegative");
  require(sigmaF >= 0 && sigmaB >= 0 && r >= 0, "price coefficients must be nonnegative");
  require(nu > 0, "nu must be positive");
  require(w0 < wInf, "w0 must be below wInf");
  require(T > 0, "horizon must be positive");
  require(uBar > 0, "uBar must be positive");
  double sup_f = 0.0;
  constexpr int n = 10000;
  for (int i = 0; i <= n; ++i) sup_f = std::max(sup_f, s.rate(T * i / n));
  require(uBar + 1e-12 >= sup_f, "uBar must dominate the feeding rate on [0, T]");
}

ModelParams ModelParams::normalized() const {
  ModelParams q = *this;
  q.h0 = 1.0;
  return q;
}

double ModelParams::growth_shape(double w) const {
  const double logistic = 1.0 - std::pow(w / wInf, nu);
  return growth == GrowthLaw::Richards ? w * logistic : logistic;
}

double ModelParams::cost_factor(double t) const {
  return cost_convention == CostConvention::Undiscounted ? std::exp(r * t) : 1.0;
}

double weight_drift(double /*t*/, double w, double f, double u, const ModelParams& p) {
  const double d = f - u;
  return (p.gamma - p.gammaF * d * d) * p.growth_shape(w);
}

double population_drift(double /*t*/, double h, double f, double u, const ModelParams& p) {
  const double d = f - u;
  return (-p.mu - p.muF * d * d) * h;
}

void euler_step(const ModelParams& p, double f, double u, double dt, double& w, double& h) {
  const double d = f - u;
  const double growth = p.gamma - p.gammaF * d * d;
  const double decay = p.mu + p.muF * d * d;
  double w_next = w + dt * growth * p.growth_shape(w);
  double h_next = h - dt * decay * h;
  if (w <= p.wInf && w_next > p.wInf) w_next = p.wInf;
  if (w_next <= 0.0) w_next = w * std::exp(-dt * std::abs(growth));
  if (h_next <= 0.0) h_next = h * std::exp(-dt * decay);
  w = w_next;
  h = h_next;
}

Trajectory integrate_deterministic(const ModelParams& p, const FeedingStrategy& s, const PointPolicy& u_policy,
                                   double dt, double horizon, const PricePathView* prices) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_deterministic: dt must be positive");
  if (horizon > p.T + 1e-12) throw std::invalid_argument("integrate_deterministic: horizon exceeds T");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  if (prices && (prices->pF.size() < steps + 1 || prices->pB.size() < steps + 1)) {
    throw std::invalid_argument("integrate_deterministic: price path shorter than the horizon");
  }
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  Trajectory traj;
  traj.t.reserve(steps + 1);
  traj.w.reserve(steps + 1);
  traj.h.reserve(steps + 1);
  double w = p.w0;
  double h = p.h0;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    traj.t.push_back(t);
    traj.w.push_back(w);
    traj.h.push_back(h);
    if (k == steps) break;
    const double pF = prices ? prices->pF[k] : nan;
    const double pB = prices ? prices->pB[k] : nan;
    const double u = u_policy(t, w, h, pF, pB);
    if (!std::isfinite(u)) throw std::domain_error("integrate_deterministic: non-finite policy output");
    euler_step(p, s.rate(t), u, dt, w, h);
  }
  return traj;
}

double biomass_peak_time(const FeedingStrategy& s, const ModelParams& p, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("biomass_peak_time: dt must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(p.T / dt));
  double w = p.w0;
  double h = p.h0;
  double best = w * h;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double f = s.rate(t);
    euler_step(p, f, f, dt, w, h);
    if (w * h > best) {
      best = w * h;
      best_k = k + 1;
    }
  }
  return static_cast<double>(best_k) * dt;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

PathBatch simulate_price_paths(const ModelParams& p, std::size_t n_paths, std::size_t n_steps,
                               std::uint64_t seed, bool keep_increments) {
  if (n_paths == 0 || n_steps == 0) throw std::invalid_argument("simulate_price_paths: empty batch");
  PathBatch batch;
  batch.n_paths = n_paths;
  batch.n_steps = n_steps;
  batch.dt = p.T / static_cast<double>(n_steps);
  batch.seed = seed;
  batch.pF.resize((n_steps + 1) * n_paths);
  batch.pB.resize((n_steps + 1) * n_paths);
  if (keep_increments) {
    batch.zF.resize(n_steps * n_paths);
    batch.zB.resize(n_steps * n_paths);
  }
  const double dt = batch.dt;
  const double sq = std::sqrt(dt);
  const double driftF = (p.r - 0.5 * p.sigmaF * p.sigmaF) * dt;
  const double driftB = (p.r - 0.5 * p.sigmaB * p.sigmaB) * dt;
  const double volF = p.sigmaF * sq;
  const double volB = p.sigmaB * sq;

  parallel_for(n_paths, 256, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::mt19937_64 rng(mix_seed(seed, i));
      std::normal_distribution<double> normal;
      double logF = std::log(p.pF0);
      double logB = std::log(p.pB0);
      batch.pF[i] = p.pF0;
      batch.pB[i] = p.pB0;
      for (std::size_t k = 0; k < n_steps; ++k) {
        const double zF = normal(rng);
        const double zB = normal(rng);
        if (keep_increments) {
          batch.zF[k * n_paths + i] = zF;
          batch.zB[k * n_paths + i] = zB;
        }
        logF += driftF + volF * zF;
        logB += driftB + volB * zB;
        batch.pF[(k + 1) * n_paths + i] = std::exp(logF);
        batch.pB[(k + 1) * n_paths + i] = std::exp(logB);
      }
    }
  });
  return batch;
}

void write_paths_csv(const PathBatch& paths, std::ostream& out) {
  out << "path_id,step,t,pF,pB\n";
  char buf[160];
  for (std::size_t i = 0; i < paths.n_paths; ++i) {
    for (std::size_t k = 0; k <= paths.n_steps; ++k) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g,%.17g,%.17g\n", i, k, paths.time(k),
                    paths.feed_price(k, i), paths.biomass_price(k, i));
      out << buf;
    }
  }
}

}  // namespace aquaopt
