#include "aquaopt/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "aquaopt/parallel.hpp"

namespace aquaopt {

void BiologicalFeedingPolicy::controls(std::size_t, double t, const StateView&, std::span<double> u) const {
  std::fill(u.begin(), u.end(), s_.rate(t));
}

void ConstantPolicy::controls(std::size_t, double, const StateView&, std::span<double> u) const {
  std::fill(u.begin(), u.end(), u_);
}

void PointwisePolicy::controls(std::size_t, double t, const StateView& x, std::span<double> u) const {
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = f_(t, x.w[i], x.h[i], x.pF[i], x.pB[i]);
}

FixedStepStop FixedStepStop::at_time(double tau, double dt) {
  return FixedStepStop(static_cast<std::size_t>(std::llround(tau / dt)));
}

void FixedStepStop::decide(std::size_t step, double, const StateView&, std::span<std::uint8_t> stop) const {
  std::fill(stop.begin(), stop.end(), static_cast<std::uint8_t>(step >= step_ ? 1 : 0));
}

void NoStop::decide(std::size_t, double, const StateView&, std::span<std::uint8_t> stop) const {
  std::fill(stop.begin(), stop.end(), std::uint8_t{0});
}

void EvaluationReport::scale(double factor) {
  for (double& v : per_path_value) v *= factor;
  mean *= factor;
  stderr_ *= std::abs(factor);
  for (auto& [path, rows] : trajectories) {
    for (auto& row : rows) {
      row.h *= factor;
      row.value *= factor;
    }
  }
}

namespace {

struct Walker {
  const PathBatch& paths;
  const ModelParams& p;
  const FeedingStrategy& s;
  std::vector<std::size_t> active;
  std::vector<double> w, h, cost;
  std::vector<double> bw, bh, bpf, bpb, bu;

  Walker(const PathBatch& paths_, const ModelParams& p_, const FeedingStrategy& s_)
      : paths(paths_), p(p_), s(s_), active(paths_.n_paths), w(paths_.n_paths, p_.w0),
        h(paths_.n_paths, p_.h0), cost(paths_.n_paths, 0.0) {
    std::iota(active.begin(), active.end(), std::size_t{0});
  }

  StateView gather(std::size_t step) {
    const std::size_t n = active.size();
    bw.resize(n);
    bh.resize(n);
    bpf.resize(n);
    bpb.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t i = active[j];
      bw[j] = w[i];
      bh[j] = h[i];
      bpf[j] = paths.feed_price(step, i);
      bpb[j] = paths.biomass_price(step, i);
    }
    return StateView{bw, bh, bpf, bpb};
  }

  // Applies the policy to all active paths: accumulates cost, advances (w, h).
  void advance(std::size_t step, const ControlPolicy& policy, double tol) {
    const double t = paths.time(step);
    const StateView x = gather(step);
    bu.assign(active.size(), 0.0);
    policy.controls(step, t, x, bu);
    const double f = s.rate(t);
    const double weight = std::exp(-p.r * t) * p.cost_factor(t) * paths.dt;
    for (std::size_t j = 0; j < active.size(); ++j) {
      const double u = bu[j];
      if (!(u >= -tol && u <= p.uBar + tol)) {
        throw std::domain_error("evaluate_farm_value: control " + std::to_string(u) + " outside [0, uBar] at step " +
                                std::to_string(step));
      }
      const std::size_t i = active[j];
      cost[i] += weight * running_cost(t, w[i], h[i], x.pF[j], x.pB[j], u);
      euler_step(p, f, u, paths.dt, w[i], h[i]);
      if (!std::isfinite(w[i]) || !std::isfinite(h[i]) || !std::isfinite(cost[i])) {
        throw std::domain_error("evaluate_farm_value: non-finite state on path " + std::to_string(i));
      }
    }
  }
};

}  // namespace

EvaluationReport evaluate_farm_value(const PathBatch& paths, const ControlPolicy& policy, const StoppingRule& rule,
                                     const ModelParams& p, const FeedingStrategy& s,
                                     const EvaluationOptions& options) {
  const std::size_t n = paths.n_paths;
  EvaluationReport report;
  report.per_path_value.assign(n, 0.0);
  report.stop_step.assign(n, paths.n_steps);
  for (std::size_t path : options.record_paths) {
    if (path >= n) throw std::out_of_range("evaluate_farm_value: recorded path index out of range");
    report.trajectories[path];
  }

  Walker walker(paths, p, s);
  const std::size_t last = std::min(rule.latest_step(paths.n_steps), paths.n_steps);
  std::vector<std::uint8_t> stop;
  std::vector<std::uint8_t> stopped(n, 0);

  for (std::size_t step = 0; step <= last; ++step) {
    const double t = paths.time(step);
    const double disc = std::exp(-p.r * t);
    const StateView x = walker.gather(step);
    stop.assign(walker.active.size(), 0);
    if (step == last) {
      std::fill(stop.begin(), stop.end(), std::uint8_t{1});
    } else {
      rule.decide(step, t, x, stop);
    }
    std::vector<std::size_t> survivors;
    survivors.reserve(walker.active.size());
    for (std::size_t j = 0; j < walker.active.size(); ++j) {
      const std::size_t i = walker.active[j];
      if (stop[j]) {
        report.per_path_value[i] = walker.cost[i] + disc * terminal_reward(t, x.w[j], x.h[j], x.pF[j], x.pB[j]);
        report.stop_step[i] = step;
        stopped[i] = 1;
      } else {
        survivors.push_back(i);
      }
    }

    if (!report.trajectories.empty()) {
      for (auto& [i, rows] : report.trajectories) {
        const double pf = paths.feed_price(step, i);
        const double pb = paths.biomass_price(step, i);
        if (stopped[i]) {
          const bool first = rows.empty() || !rows.back().stopped;
          if (first) {
            rows.push_back({t, walker.w[i], walker.h[i], pf, pb, 0.0, report.per_path_value[i], true});
          } else {
            TrajectoryRow row = rows.back();
            row.t = t;
            row.pF = pf;
            row.pB = pb;
            rows.push_back(row);
          }
        } else {
          // u is filled in after the policy runs below.
          rows.push_back({t, walker.w[i], walker.h[i], pf, pb, 0.0,
                          walker.cost[i] + disc * terminal_reward(t, walker.w[i], walker.h[i], pf, pb), false});
        }
      }
    }

    walker.active = std::move(survivors);
    if (walker.active.empty()) {
      if (!report.trajectories.empty() && step < paths.n_steps) {
        // Keep recorded trajectories on the full grid for plotting.
        for (std::size_t k = step + 1; k <= paths.n_steps; ++k) {
          for (auto& [i, rows] : report.trajectories) {
            TrajectoryRow row = rows.back();
            row.t = paths.time(k);
            row.pF = paths.feed_price(k, i);
            row.pB = paths.biomass_price(k, i);
            rows.push_back(row);
          }
        }
      }
      break;
    }
    walker.advance(step, policy, options.control_tolerance);
    if (!report.trajectories.empty()) {
      for (std::size_t j = 0; j < walker.active.size(); ++j) {
        auto it = report.trajectories.find(walker.active[j]);
        if (it != report.trajectories.end()) it->second.back().u = walker.bu[j];
      }
    }
  }

  double sum = 0.0;
  double tau_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += report.per_path_value[i];
    tau_sum += paths.time(report.stop_step[i]);
  }
  report.mean = sum / static_cast<double>(n);
  report.mean_stopping_time = tau_sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : report.per_path_value) ss += (v - report.mean) * (v - report.mean);
  const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  report.stderr_ = std::sqrt(var / static_cast<double>(n));
  return report;
}

double StateTape::stop_value(std::size_t d, std::size_t path) const {
  const std::size_t k = index(d, path);
  return cost[k] + std::exp(-r * times[d]) * terminal_reward(times[d], w[k], h[k], pF[k], pB[k]);
}

StateTape record_states(const PathBatch& paths, const ControlPolicy& policy, const ModelParams& p,
                        const FeedingStrategy& s, std::size_t stride, std::size_t last_step) {
  if (stride == 0) throw std::invalid_argument("record_states: stride must be positive");
  last_step = std::min(last_step, paths.n_steps);
  StateTape tape;
  tape.n_paths = paths.n_paths;
  tape.r = p.r;
  for (std::size_t k = 0; k < last_step; k += stride) tape.steps.push_back(k);
  tape.steps.push_back(last_step);
  const std::size_t nd = tape.steps.size();
  const std::size_t np = paths.n_paths;
  for (auto* v : {&tape.w, &tape.h, &tape.pF, &tape.pB, &tape.cost}) v->resize(nd * np);
  for (std::size_t k : tape.steps) tape.times.push_back(paths.time(k));

  Walker walker(paths, p, s);
  std::size_t d = 0;
  for (std::size_t step = 0; step <= last_step; ++step) {
    if (d < nd && tape.steps[d] == step) {
      for (std::size_t i = 0; i < np; ++i) {
        const std::size_t k = tape.index(d, i);
        tape.w[k] = walker.w[i];
        tape.h[k] = walker.h[i];
        tape.pF[k] = paths.feed_price(step, i);
        tape.pB[k] = paths.biomass_price(step, i);
        tape.cost[k] = walker.cost[i];
      }
      ++d;
    }
    if (step < last_step) walker.advance(step, policy, 1e-12);
  }
  return tape;
}

double deterministic_benchmark_value(const FeedingStrategy& s, const ModelParams& p, BenchmarkControl u,
                                     double tau) {
  if (tau > p.T + 1e-12 || tau < 0.0) throw std::invalid_argument("deterministic_benchmark_value: tau outside [0, T]");
  constexpr double dt = 1e-4;
  const auto steps = static_cast<std::size_t>(std::llround(tau / dt));
  double w = p.w0;
  double h = p.h0;
  double cost = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double f = s.rate(t);
    const double uk = u == BenchmarkControl::Biological ? f : 0.0;
    cost += p.cost_factor(t) * running_cost(t, w, h, p.pF0, p.pB0, uk) * dt;
    euler_step(p, f, uk, dt, w, h);
  }
  return cost + terminal_reward(tau, w, h, p.pF0, p.pB0);
}

void write_trajectory_csv(const std::vector<TrajectoryRow>& rows, std::ostream& out) {
  out << "t,w,h,pF,pB,u,value,stopped\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d\n", r.t, r.w, r.h, r.pF, r.pB, r.u,
                  r.value, r.stopped ? 1 : 0);
    out << buf;
  }
}

}  // namespace aquaopt
