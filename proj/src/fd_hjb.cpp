#include "aquaopt/fd_hjb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aquaopt/parallel.hpp"
#include "aquaopt/simd/kernels.hpp"

namespace aquaopt {

GridSpec GridSpec::paper(const ModelParams& p) {
  GridSpec g;
  g.n_time = 2048;
  g.w = {p.w0 / 2.0, 1.1 * p.wInf, 64};
  g.h = {p.h0 / 10.0, 1.1 * p.h0, 64};
  g.pF = {0.0019, 0.3856, 32};
  g.pB = {0.0055, 0.2635, 32};
  g.u = {0.0, 1.0, 64};
  return g;
}

GridSpec GridSpec::desk(const ModelParams& p) {
  GridSpec g = paper(p);
  g.n_time = 512;
  g.w.n = 32;
  g.h.n = 32;
  g.pF.n = 16;
  g.pB.n = 16;
  g.u.n = 32;
  return g;
}

void GridSpec::validate() const {
  auto check = [](const AxisSpec& a, const char* name) {
    if (!(a.hi > a.lo) || a.n < 2) {
      throw std::invalid_argument(std::string("grid axis ") + name + ": need lo < hi and at least 2 points");
    }
  };
  check(w, "w");
  check(h, "h");
  check(pF, "pF");
  check(pB, "pB");
  check(u, "u");
  if (u.n > 256) throw std::invalid_argument("grid: at most 256 controls are supported");
  if (n_time < 1) throw std::invalid_argument("grid: need at least one time step");
}

std::string StabilityReport::message() const {
  std::ostringstream os;
  if (ok) {
    os << "stable: min diagonal coefficient " << min_diagonal;
  } else {
    os << "unstable: diagonal coefficient " << min_diagonal << " at time index " << worst_time << ", control index "
       << worst_control << ", node (" << worst_node[0] << ", " << worst_node[1] << ", " << worst_node[2] << ", "
       << worst_node[3] << "); largest stable dt " << max_stable_dt;
  }
  return os.str();
}

StabilityReport stability_check(const GridSpec& grid, const ModelParams& p, const FeedingStrategy& s) {
  grid.validate();
  const double dt = grid.dt(p);
  StabilityReport rep;

  // Per-axis worst node factors.
  auto argmax_over = [](const AxisSpec& a, auto&& fn) {
    std::size_t best_i = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < a.n; ++i) {
      const double v = fn(a.node(i));
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    return std::pair{best_i, best};
  };
  const auto [iw, shape_max] = argmax_over(grid.w, [&](double w) { return std::abs(p.growth_shape(w)); });
  const auto [ih, h_max] = argmax_over(grid.h, [](double h) { return h; });
  const double dF = grid.pF.step();
  const double dB = grid.pB.step();
  const auto [iF, rateF] = argmax_over(grid.pF, [&](double x) {
    return p.r * x / dF + p.sigmaF * p.sigmaF * x * x / (dF * dF);
  });
  const auto [iB, rateB] = argmax_over(grid.pB, [&](double x) {
    return p.r * x / dB + p.sigmaB * p.sigmaB * x * x / (dB * dB);
  });

  double worst_rate = -1.0;
  for (std::size_t n = 0; n < grid.n_time; ++n) {
    const double f = s.rate(static_cast<double>(n) * dt);
    for (std::size_t j = 0; j < grid.u.n; ++j) {
      const double d = (f - grid.u.node(j)) * (f - grid.u.node(j));
      const double rate = std::abs(p.gamma - p.gammaF * d) * shape_max / grid.w.step() +
                          (p.mu + p.muF * d) * h_max / grid.h.step() + rateF + rateB;
      if (rate > worst_rate) {
        worst_rate = rate;
        rep.worst_time = n;
        rep.worst_control = j;
      }
    }
  }
  rep.worst_node = {iw, ih, iF, iB};
  rep.min_diagonal = 1.0 - dt * worst_rate;
  rep.ok = rep.min_diagonal >= 0.0;
  rep.max_stable_dt = worst_rate > 0.0 ? 1.0 / worst_rate : std::numeric_limits<double>::infinity();
  return rep;
}

std::array<double, 9> stencil_weights(const GridSpec& grid, const ModelParams& p, const FeedingStrategy& s,
                                      std::size_t time_index, std::array<std::size_t, 4> node, double u) {
  const double dt = grid.dt(p);
  const double t = static_cast<double>(time_index) * dt;
  const double f = s.rate(t);
  const double w = grid.w.node(node[0]);
  const double h = grid.h.node(node[1]);
  const double pF = grid.pF.node(node[2]);
  const double pB = grid.pB.node(node[3]);
  const double bw = weight_drift(t, w, f, u, p);
  const double bh = population_drift(t, h, f, u, p);
  const double bF = p.r * pF;
  const double bB = p.r * pB;
  const double aF = p.sigmaF * p.sigmaF * pF * pF;
  const double aB = p.sigmaB * p.sigmaB * pB * pB;
  const double dw = grid.w.step(), dh = grid.h.step(), dF = grid.pF.step(), dB = grid.pB.step();
  auto pos = [](double x) { return std::max(x, 0.0); };
  auto neg = [](double x) { return std::max(-x, 0.0); };
  std::array<double, 9> wts{};
  wts[1] = dt / dw * pos(bw);
  wts[2] = dt / dw * neg(bw);
  wts[3] = dt / dh * pos(bh);
  wts[4] = dt / dh * neg(bh);
  wts[5] = dt / dF * pos(bF) + dt / (2 * dF * dF) * aF;
  wts[6] = dt / dF * neg(bF) + dt / (2 * dF * dF) * aF;
  wts[7] = dt / dB * pos(bB) + dt / (2 * dB * dB) * aB;
  wts[8] = dt / dB * neg(bB) + dt / (2 * dB * dB) * aB;
  wts[0] = 1.0 - dt * (std::abs(bw) / dw + std::abs(bh) / dh + std::abs(bF) / dF + std::abs(bB) / dB) -
           dt * (aF / (dF * dF) + aB / (dB * dB));
  return wts;
}

HjbStepper::HjbStepper(const GridSpec& grid, const ModelParams& p, const FeedingStrategy& s)
    : grid_(grid), p_(p), s_(s), dt_(grid.dt(p)) {
  grid_.validate();
  const std::size_t nn = grid_.n_nodes();
  for (std::size_t j = 0; j < grid_.u.n; ++j) controls_.push_back(grid_.u.node(j));
  shape_.resize(nn);
  h_.resize(nn);
  hpf_.resize(nn);
  g_.resize(nn);
  for (std::size_t iw = 0; iw < grid_.w.n; ++iw) {
    const double w = grid_.w.node(iw);
    const double shape = p_.growth_shape(w);
    for (std::size_t ih = 0; ih < grid_.h.n; ++ih) {
      const double h = grid_.h.node(ih);
      for (std::size_t iF = 0; iF < grid_.pF.n; ++iF) {
        const double pF = grid_.pF.node(iF);
        for (std::size_t iB = 0; iB < grid_.pB.n; ++iB) {
          const std::size_t k = grid_.node_index(iw, ih, iF, iB);
          shape_[k] = shape;
          h_[k] = h;
          hpf_[k] = h * pF;
          g_[k] = terminal_reward(0.0, w, h, pF, grid_.pB.node(iB));
        }
      }
    }
  }
  base_.resize(nn);
  dwp_.resize(nn);
  dwm_.resize(nn);
  dh_.resize(nn);
  growth_.resize(grid_.u.n);
  mortality_.resize(grid_.u.n);
  cost_.resize(grid_.u.n);
}

namespace {

// Central second difference. A face uses a linearly extrapolated ghost
// node, so its second difference vanishes.
inline double second_difference(const double* v, std::size_t k, std::size_t stride, std::size_t i, std::size_t n) {
  if (i == 0 || i + 1 == n) return 0.0;
  return v[k + stride] - 2.0 * v[k] + v[k - stride];
}

}  // namespace

void HjbStepper::step(std::span<const double> v_next, std::size_t n, FdMode mode, std::span<double> v_now,
                      std::span<std::uint8_t> arg) {
  const std::size_t nn = grid_.n_nodes();
  if (v_next.size() != nn || v_now.size() != nn || arg.size() != nn) {
    throw std::invalid_argument("HjbStepper::step: field size does not match the grid");
  }
  const double t = static_cast<double>(n) * dt_;
  const double f = s_.rate(t);
  const double c = p_.cost_factor(t);
  for (std::size_t j = 0; j < controls_.size(); ++j) {
    const double d = (f - controls_[j]) * (f - controls_[j]);
    growth_[j] = dt_ * (p_.gamma - p_.gammaF * d);
    mortality_[j] = dt_ * (-p_.mu - p_.muF * d);
    cost_[j] = dt_ * controls_[j] * c;
  }

  const std::size_t nw = grid_.w.n, nh = grid_.h.n, nF = grid_.pF.n, nB = grid_.pB.n;
  const std::size_t sB = 1, sF = nB, sH = nF * nB, sW = nh * nF * nB;
  const double inv_dw = 1.0 / grid_.w.step();
  const double inv_dh = 1.0 / grid_.h.step();
  const double inv_dF = 1.0 / grid_.pF.step();
  const double inv_dB = 1.0 / grid_.pB.step();
  const double half_sF2 = 0.5 * p_.sigmaF * p_.sigmaF;
  const double half_sB2 = 0.5 * p_.sigmaB * p_.sigmaB;
  const double* v = v_next.data();

  parallel_for(nw * nh, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t wh = begin; wh < end; ++wh) {
      const std::size_t iw = wh / nh;
      const std::size_t ih = wh % nh;
      for (std::size_t iF = 0; iF < nF; ++iF) {
        const double pF = grid_.pF.node(iF);
        const double bF = p_.r * pF;
        const double aF = half_sF2 * pF * pF;
        for (std::size_t iB = 0; iB < nB; ++iB) {
          const std::size_t k = grid_.node_index(iw, ih, iF, iB);
          const double V = v[k];
          double up = iw + 1 < nw ? (v[k + sW] - V) * inv_dw : 0.0;
          double down = iw > 0 ? (V - v[k - sW]) * inv_dw : 0.0;
          if (iw + 1 == nw) up = down;
          if (iw == 0) down = up;
          dwp_[k] = up;
          dwm_[k] = down;
          dh_[k] = ih > 0 ? (V - v[k - sH]) * inv_dh : (v[k + sH] - V) * inv_dh;

          const double pB = grid_.pB.node(iB);
          const double bB = p_.r * pB;
          const double aB = half_sB2 * pB * pB;
          // Price drifts are nonnegative: forward differences, inward at the top face.
          const double dFv = iF + 1 < nF ? (v[k + sF] - V) * inv_dF : (V - v[k - sF]) * inv_dF;
          const double d2F = second_difference(v, k, sF, iF, nF) * inv_dF * inv_dF;
          const double dBv = iB + 1 < nB ? (v[k + sB] - V) * inv_dB : (V - v[k - sB]) * inv_dB;
          const double d2B = second_difference(v, k, sB, iB, nB) * inv_dB * inv_dB;
          base_[k] = V + dt_ * (bF * dFv + aF * d2F + bB * dBv + aB * d2B);
        }
      }
    }
  });

  constexpr std::size_t grain = 4096;
  const bool vi = mode == FdMode::VariationalInequality;
  bool finite = true;
  std::size_t bad = 0;
  parallel_for(nn, grain, [&](std::size_t begin, std::size_t end) {
    simd::ControlSweepArgs a;
    a.n_nodes = end - begin;
    a.base = base_.data() + begin;
    a.dw_up = dwp_.data() + begin;
    a.dw_down = dwm_.data() + begin;
    a.dh = dh_.data() + begin;
    a.shape = shape_.data() + begin;
    a.h = h_.data() + begin;
    a.hpf = hpf_.data() + begin;
    a.n_controls = controls_.size();
    a.growth = growth_.data();
    a.mortality = mortality_.data();
    a.cost = cost_.data();
    a.discount = 1.0 - p_.r * dt_;
    a.best = v_now.data() + begin;
    a.arg = arg.data() + begin;
    simd::control_sweep(a);
    for (std::size_t k = begin; k < end; ++k) {
      if (vi && g_[k] > v_now[k]) v_now[k] = g_[k];
      if (!std::isfinite(v_now[k])) {
        finite = false;
        bad = k;
      }
    }
  });
  if (!finite) {
    throw std::domain_error("HjbStepper::step: non-finite value at time index " + std::to_string(n) + ", node " +
                            std::to_string(bad));
  }
}

StepResult step_backward(const ValueField& v_next, std::size_t n, const GridSpec& grid, const ModelParams& p,
                         const FeedingStrategy& s, FdMode mode) {
  HjbStepper stepper(grid, p, s);
  StepResult out;
  out.value.time_index = n;
  out.value.v.resize(grid.n_nodes());
  out.policy.resize(grid.n_nodes());
  stepper.step(v_next.v, n, mode, out.value.v, out.policy);
  return out;
}

namespace {

struct Locator {
  std::size_t i0;
  double frac;
};

Locator locate(const AxisSpec& a, double x) {
  const double q = std::clamp((x - a.lo) / a.step(), 0.0, static_cast<double>(a.n - 1));
  std::size_t i0 = static_cast<std::size_t>(q);
  if (i0 + 1 >= a.n) i0 = a.n - 2;
  return {i0, q - static_cast<double>(i0)};
}

template <typename Field>
double multilinear(const GridSpec& g, double w, double h, double pF, double pB, Field&& field) {
  const Locator lw = locate(g.w, w), lh = locate(g.h, h), lF = locate(g.pF, pF), lB = locate(g.pB, pB);
  double acc = 0.0;
  for (int cw = 0; cw < 2; ++cw) {
    const double ww = cw ? lw.frac : 1.0 - lw.frac;
    if (ww == 0.0) continue;
    for (int ch = 0; ch < 2; ++ch) {
      const double wh = ww * (ch ? lh.frac : 1.0 - lh.frac);
      if (wh == 0.0) continue;
      for (int cF = 0; cF < 2; ++cF) {
        const double whF = wh * (cF ? lF.frac : 1.0 - lF.frac);
        if (whF == 0.0) continue;
        for (int cB = 0; cB < 2; ++cB) {
          const double wt = whF * (cB ? lB.frac : 1.0 - lB.frac);
          if (wt == 0.0) continue;
          acc += wt * field(g.node_index(lw.i0 + cw, lh.i0 + ch, lF.i0 + cF, lB.i0 + cB));
        }
      }
    }
  }
  return acc;
}

// Slice interval containing time t and the weight of the later slice.
std::pair<std::size_t, double> locate_slice(const FdSolution& sol, double t) {
  const double tau = std::clamp(t / sol.dt, 0.0, static_cast<double>(sol.horizon_steps));
  const std::size_t ns = sol.slice_steps.size();
  if (ns == 1) return {0, 0.0};
  std::size_t k = std::min(static_cast<std::size_t>(tau / static_cast<double>(sol.stride)), ns - 2);
  const double s0 = static_cast<double>(sol.slice_steps[k]);
  const double s1 = static_cast<double>(sol.slice_steps[k + 1]);
  return {k, std::clamp((tau - s0) / (s1 - s0), 0.0, 1.0)};
}

}  // namespace

double FdSolution::interpolate_value(double t, double w, double h, double pF, double pB) const {
  const std::size_t nn = grid.n_nodes();
  const auto [k, a] = locate_slice(*this, t);
  auto at = [&](std::size_t slot) {
    const float* vals = values.data() + slot * nn;
    return multilinear(grid, w, h, pF, pB, [vals](std::size_t i) { return static_cast<double>(vals[i]); });
  };
  const double v0 = at(k);
  if (a == 0.0) return v0;
  return (1.0 - a) * v0 + a * at(k + 1);
}

double FdSolution::interpolate_policy(double t, double w, double h, double pF, double pB) const {
  const std::size_t nn = grid.n_nodes();
  const auto [k, a] = locate_slice(*this, t);
  auto at = [&](std::size_t slot) {
    const std::uint8_t* idx = policy.data() + slot * nn;
    return multilinear(grid, w, h, pF, pB, [&](std::size_t i) { return controls[idx[i]]; });
  };
  const double u0 = at(k);
  if (a == 0.0) return u0;
  return (1.0 - a) * u0 + a * at(k + 1);
}

double FdSolution::interpolate_value0(double w, double h, double pF, double pB) const {
  return multilinear(grid, w, h, pF, pB, [this](std::size_t i) { return value0[i]; });
}

FdSolution solve(const GridSpec& grid, const ModelParams& p, const FeedingStrategy& s, const SolveOptions& options) {
  grid.validate();
  const StabilityReport stab = stability_check(grid, p, s);
  if (!stab.ok && !options.allow_unstable) throw std::runtime_error("fd solve rejected: " + stab.message());
  if (options.policy_stride == 0) throw std::invalid_argument("fd solve: policy stride must be positive");

  FdSolution sol;
  sol.grid = grid;
  sol.mode = options.mode;
  sol.dt = grid.dt(p);
  const double horizon = options.horizon < 0.0 ? p.T : options.horizon;
  if (horizon > p.T + 1e-12) throw std::invalid_argument("fd solve: horizon exceeds T");
  sol.horizon_steps = static_cast<std::size_t>(std::llround(horizon / sol.dt));
  if (sol.horizon_steps == 0) throw std::invalid_argument("fd solve: horizon shorter than one time step");
  sol.stride = options.policy_stride;
  for (std::size_t j = 0; j < grid.u.n; ++j) sol.controls.push_back(grid.u.node(j));
  for (std::size_t k = 0; k < sol.horizon_steps; k += sol.stride) sol.slice_steps.push_back(k);
  sol.slice_steps.push_back(sol.horizon_steps);

  const std::size_t nn = grid.n_nodes();
  const std::size_t ns = sol.slice_steps.size();
  sol.values.resize(ns * nn);
  sol.policy.resize(ns * nn);

  HjbStepper stepper(grid, p, s);
  std::vector<double> v(stepper.obstacle().begin(), stepper.obstacle().end());
  std::vector<double> v_now(nn);
  std::vector<std::uint8_t> arg(nn);
  auto store = [&](std::size_t slot, const std::vector<double>& vals, const std::vector<std::uint8_t>* pol) {
    std::transform(vals.begin(), vals.end(), sol.values.begin() + static_cast<std::ptrdiff_t>(slot * nn),
                   [](double x) { return static_cast<float>(x); });
    if (pol) std::copy(pol->begin(), pol->end(), sol.policy.begin() + static_cast<std::ptrdiff_t>(slot * nn));
  };
  store(ns - 1, v, nullptr);
  if (options.observer) options.observer(sol.horizon_steps, v);

  for (std::size_t n = sol.horizon_steps; n-- > 0;) {
    stepper.step(v, n, options.mode, v_now, arg);
    v.swap(v_now);
    if (n + 1 == sol.horizon_steps) {
      std::copy(arg.begin(), arg.end(), sol.policy.begin() + static_cast<std::ptrdiff_t>((ns - 1) * nn));
    }
    if (n % sol.stride == 0) store(n / sol.stride, v, &arg);
    if (options.observer) options.observer(n, v);
  }
  sol.value0 = v;
  sol.v0_at_x0 = sol.interpolate_value0(p.w0, p.h0, p.pF0, p.pB0);
  return sol;
}

void FdPolicy::controls(std::size_t, double t, const StateView& x, std::span<double> u) const {
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = std::clamp(sol_->interpolate_policy(t, x.w[i], x.h[i], x.pF[i], x.pB[i]), 0.0, uBar_);
  }
}

void FdValueStop::decide(std::size_t, double t, const StateView& x, std::span<std::uint8_t> stop) const {
  for (std::size_t i = 0; i < stop.size(); ++i) {
    const double v = sol_->interpolate_value(t, x.w[i], x.h[i], x.pF[i], x.pB[i]);
    stop[i] = v <= terminal_reward(t, x.w[i], x.h[i], x.pF[i], x.pB[i]) + tol_ ? 1 : 0;
  }
}

std::size_t FdValueStop::latest_step(std::size_t n_steps) const {
  const auto k = static_cast<std::size_t>(std::llround(sol_->horizon() / T_ * static_cast<double>(n_steps)));
  return std::min(k, n_steps);
}

FdValueStop stopping_rule_from_value(const FdSolution& sol, double tolerance, double T) {
  if (sol.mode != FdMode::VariationalInequality) {
    throw std::invalid_argument("stopping_rule_from_value: needs a variational-inequality solution");
  }
  return FdValueStop(sol, tolerance, T);
}

namespace {

constexpr char kMagic[8] = {'A', 'Q', 'F', 'D', 'S', 'O', 'L', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("read_solution: truncated input");
  return v;
}

template <typename T>
void put_array(std::ostream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void get_array(std::istream& in, std::vector<T>& v, std::size_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw std::runtime_error("read_solution: truncated input");
}

}  // namespace

void write_solution(const FdSolution& sol, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  const GridSpec& g = sol.grid;
  for (std::uint64_t v : {std::uint64_t(g.n_time), std::uint64_t(g.w.n), std::uint64_t(g.h.n), std::uint64_t(g.pF.n),
                          std::uint64_t(g.pB.n), std::uint64_t(g.u.n), std::uint64_t(sol.mode), std::uint64_t(sol.horizon_steps),
                          std::uint64_t(sol.stride), std::uint64_t(sol.slice_steps.size())}) {
    put(out, v);
  }
  for (const AxisSpec* a : {&g.w, &g.h, &g.pF, &g.pB, &g.u}) {
    put(out, a->lo);
    put(out, a->hi);
  }
  put(out, sol.dt);
  put(out, sol.v0_at_x0);
  for (std::size_t s : sol.slice_steps) put(out, std::uint64_t(s));
  put_array(out, sol.value0);
  put_array(out, sol.values);
  put_array(out, sol.policy);
}

FdSolution read_solution(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("read_solution: bad magic");
  FdSolution sol;
  GridSpec& g = sol.grid;
  g.n_time = get<std::uint64_t>(in);
  g.w.n = get<std::uint64_t>(in);
  g.h.n = get<std::uint64_t>(in);
  g.pF.n = get<std::uint64_t>(in);
  g.pB.n = get<std::uint64_t>(in);
  g.u.n = get<std::uint64_t>(in);
  sol.mode = static_cast<FdMode>(get<std::uint64_t>(in));
  sol.horizon_steps = get<std::uint64_t>(in);
  sol.stride = get<std::uint64_t>(in);
  const auto ns = get<std::uint64_t>(in);
  for (AxisSpec* a : {&g.w, &g.h, &g.pF, &g.pB, &g.u}) {
    a->lo = get<double>(in);
    a->hi = get<double>(in);
  }
  g.validate();
  sol.dt = get<double>(in);
  sol.v0_at_x0 = get<double>(in);
  for (std::uint64_t i = 0; i < ns; ++i) sol.slice_steps.push_back(get<std::uint64_t>(in));
  for (std::size_t j = 0; j < g.u.n; ++j) sol.controls.push_back(g.u.node(j));
  const std::size_t nn = g.n_nodes();
  get_array(in, sol.value0, nn);
  get_array(in, sol.values, ns * nn);
  get_array(in, sol.policy, ns * nn);
  return sol;
}

void write_value0_csv(const FdSolution& sol, std::ostream& out) {
  const GridSpec& g = sol.grid;
  out << "w,h,pF,pB,V\n";
  char buf[160];
  for (std::size_t iw = 0; iw < g.w.n; ++iw)
    for (std::size_t ih = 0; ih < g.h.n; ++ih)
      for (std::size_t iF = 0; iF < g.pF.n; ++iF)
        for (std::size_t iB = 0; iB < g.pB.n; ++iB) {
          std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.12g\n", g.w.node(iw), g.h.node(ih),
                        g.pF.node(iF), g.pB.node(iB), sol.value0[g.node_index(iw, ih, iF, iB)]);
          out << buf;
        }
}

}  // namespace aquaopt
