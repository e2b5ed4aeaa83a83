#include "aquaopt/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace aquaopt {

SamplingBox SamplingBox::from_grid(const GridSpec& grid, const ModelParams& p) {
  SamplingBox b;
  b.lo = {0.0, grid.w.lo, grid.h.lo, grid.pF.lo, grid.pB.lo};
  b.hi = {p.T, grid.w.hi, grid.h.hi, grid.pF.hi, grid.pB.hi};
  return b;
}

void PinnConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid network training settings: ") + what);
  };
  require(batch >= 1, "batch must be at least 1");
  require(fuzzy_eps > 0.0 && stop_eps > 0.0, "tolerances must be positive");
  require(control_grid >= 2, "control grid needs at least 2 points");
  require(pool >= 1 && max_rounds >= 1, "sampling pool and round cap must be positive");
  require(lr0 > 0.0 && control_lr > 0.0, "learning rates must be positive");
  require(!hidden.empty(), "need at least one hidden layer");
}

double feedback_control(double Vw, double Vh, double t, double w, double h, double pF, double /*pB*/,
                        const ModelParams& p, const FeedingStrategy& s, double delta) {
  const double f = std::max(s.rate(t), 0.0);
  const double c = p.cost_factor(t);
  const double D = p.gammaF * p.growth_shape(w) * Vw + p.muF * h * Vh;
  if (D > delta) return std::clamp(f - c * h * pF / (2.0 * D), 0.0, f);
  // Convex or flat in u: compare the endpoints.
  const double q0 = -f * f * D;
  const double qf = -c * h * pF * f;
  return qf > q0 ? f : 0.0;
}

double hamiltonian(const ModelParams& p, const FeedingStrategy& s, double t, double w, double h, double pF,
                   double pB, const Derivatives& d, double u) {
  const double f = s.rate(t);
  return weight_drift(t, w, f, u, p) * d.Vw + population_drift(t, h, f, u, p) * d.Vh + p.r * pF * d.VF +
         p.r * pB * d.VB + 0.5 * p.sigmaF * p.sigmaF * pF * pF * d.VFF +
         0.5 * p.sigmaB * p.sigmaB * pB * pB * d.VBB + cost_rate(p, t, h, pF, u);
}

double hamiltonian_du(const ModelParams& p, const FeedingStrategy& s, double t, double w, double h, double pF,
                      double /*pB*/, const Derivatives& d, double u) {
  const double f = s.rate(t);
  return 2.0 * (f - u) * (p.gammaF * p.growth_shape(w) * d.Vw + p.muF * h * d.Vh) - p.cost_factor(t) * h * pF;
}

double pde_residual(const ModelParams& p, const FeedingStrategy& s, double t, double w, double h, double pF,
                    double pB, const Derivatives& d, double u) {
  return d.Vt + hamiltonian(p, s, t, w, h, pF, pB, d, u) - p.r * d.V;
}

InputBatch make_inputs(double t, const StateView& x) {
  InputBatch in(5, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    in.at(kT, i) = t;
    in.at(kW, i) = x.w[i];
    in.at(kH, i) = x.h[i];
    in.at(kPF, i) = x.pF[i];
    in.at(kPB, i) = x.pB[i];
  }
  return in;
}

namespace {

void push_point(InputBatch& b, const std::array<double, 5>& x) {
  for (std::size_t f = 0; f < 5; ++f) b.x.push_back(x[f]);
  ++b.n;
}

// Points are collected row-wise; convert to the feature-major layout.
InputBatch to_feature_major(const InputBatch& rows) {
  InputBatch out(5, rows.n);
  for (std::size_t i = 0; i < rows.n; ++i) {
    for (std::size_t f = 0; f < 5; ++f) out.at(f, i) = rows.x[i * 5 + f];
  }
  return out;
}

double obstacle(const InputBatch& b, std::size_t i) {
  return terminal_reward(b.at(kT, i), b.at(kW, i), b.at(kH, i), b.at(kPF, i), b.at(kPB, i));
}

}  // namespace

SampledRegions sample_regions(const Mlp& value_net, const SamplingBox& box, const PinnConfig& cfg,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](std::array<double, 5>& x) {
    for (std::size_t f = 0; f < 5; ++f) x[f] = box.lo[f] + (box.hi[f] - box.lo[f]) * unit(rng);
  };
  SampledRegions out;
  InputBatch cont_rows, fb_rows;
  cont_rows.n_features = fb_rows.n_features = 5;
  std::vector<std::array<double, 5>> pool(cfg.pool);
  std::vector<double> fuzz(cfg.pool);
  while ((cont_rows.n < cfg.batch || fb_rows.n < cfg.batch) && out.diag.rounds < cfg.max_rounds) {
    ++out.diag.rounds;
    InputBatch cand(5, cfg.pool);
    for (std::size_t i = 0; i < cfg.pool; ++i) {
      draw(pool[i]);
      fuzz[i] = unit(rng);
      for (std::size_t f = 0; f < 5; ++f) cand.at(f, i) = pool[i][f];
    }
    const std::vector<double> v = predict(value_net, cand);
    out.diag.drawn += cfg.pool;
    for (std::size_t i = 0; i < cfg.pool; ++i) {
      const double gap = v[i] - obstacle(cand, i);
      if (gap > 0.0 && cont_rows.n < cfg.batch) push_point(cont_rows, pool[i]);
      const double band = cfg.one_sided_boundary ? gap : std::abs(gap);
      if (band < cfg.fuzzy_eps * fuzz[i] && fb_rows.n < cfg.batch) push_point(fb_rows, pool[i]);
    }
  }
  out.continuation = to_feature_major(cont_rows);
  out.boundary = to_feature_major(fb_rows);
  out.diag.continuation = cont_rows.n;
  out.diag.boundary = fb_rows.n;
  out.diag.starved = cont_rows.n < cfg.batch || fb_rows.n < cfg.batch;

  out.terminal = InputBatch(5, cfg.batch);
  std::array<double, 5> x{};
  for (std::size_t i = 0; i < cfg.batch; ++i) {
    draw(x);
    x[kT] = box.hi[kT];
    for (std::size_t f = 0; f < 5; ++f) out.terminal.at(f, i) = x[f];
  }
  return out;
}

Derivatives derivatives_at(const Tape& tape, std::size_t i) {
  Derivatives d;
  d.V = tape.value(i);
  d.Vt = tape.out(tape.grad_channel(kT), i);
  d.Vw = tape.out(tape.grad_channel(kW), i);
  d.Vh = tape.out(tape.grad_channel(kH), i);
  d.VF = tape.out(tape.grad_channel(kPF), i);
  d.VB = tape.out(tape.grad_channel(kPB), i);
  d.VFF = tape.out(tape.hess_channel(kPF), i);
  d.VBB = tape.out(tape.hess_channel(kPB), i);
  return d;
}

namespace {

const ChannelSet& residual_channels() {
  static const ChannelSet cs = ChannelSet::gradient_and_hess(5, {kPF, kPB});
  return cs;
}

std::vector<double> control_values(const Mlp& control_net, const InputBatch& batch, double uBar) {
  std::vector<double> u = predict(control_net, batch);
  for (double& v : u) v = std::min(v, uBar);
  return u;
}

// Controls entering the residual on a batch whose value tape is given.
std::vector<double> residual_controls(const Tape& tape, const ControlSource& control, const InputBatch& batch,
                                      const ModelParams& p, const FeedingStrategy& s) {
  if (control.control_net) return control_values(*control.control_net, batch, p.uBar);
  std::vector<double> u(batch.n);
  for (std::size_t i = 0; i < batch.n; ++i) {
    const Derivatives d = derivatives_at(tape, i);
    u[i] = feedback_control(d.Vw, d.Vh, batch.at(kT, i), batch.at(kW, i), batch.at(kH, i), batch.at(kPF, i),
                            batch.at(kPB, i), p, s);
  }
  return u;
}

}  // namespace

std::vector<double> pde_residual(const Mlp& value_net, const ControlSource& control, const InputBatch& batch,
                                 const ModelParams& p, const FeedingStrategy& s) {
  Tape tape;
  forward(value_net, batch, residual_channels(), tape);
  const std::vector<double> u = residual_controls(tape, control, batch, p, s);
  std::vector<double> r(batch.n);
  for (std::size_t i = 0; i < batch.n; ++i) {
    r[i] = pde_residual(p, s, batch.at(kT, i), batch.at(kW, i), batch.at(kH, i), batch.at(kPF, i),
                        batch.at(kPB, i), derivatives_at(tape, i), u[i]);
  }
  return r;
}

namespace {

// Per-point derivatives of the value network, so control losses report the
// full Hamiltonian.
std::vector<Derivatives> value_gradients(const Mlp& value_net, const InputBatch& batch) {
  Tape tape;
  forward(value_net, batch, residual_channels(), tape);
  std::vector<Derivatives> out(batch.n);
  for (std::size_t i = 0; i < batch.n; ++i) out[i] = derivatives_at(tape, i);
  return out;
}

enum class ControlLoss { MeanHamiltonian, Shortfall, LiteralHinge };

// Loss value and d loss / d u per point for a control loss.
double control_loss_terms(ControlLoss kind, const std::vector<Derivatives>& d, const InputBatch& batch,
                          const std::vector<double>& u, std::span<const double> u_grid, const ModelParams& p,
                          const FeedingStrategy& s, std::vector<double>* dldu) {
  const double inv_n = 1.0 / static_cast<double>(batch.n);
  if (dldu) dldu->assign(batch.n, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.n; ++i) {
    const double t = batch.at(kT, i), w = batch.at(kW, i), h = batch.at(kH, i);
    const double pF = batch.at(kPF, i), pB = batch.at(kPB, i);
    const double y = hamiltonian(p, s, t, w, h, pF, pB, d[i], u[i]);
    const double hu = hamiltonian_du(p, s, t, w, h, pF, pB, d[i], u[i]);
    if (kind == ControlLoss::MeanHamiltonian) {
      loss -= y * inv_n;
      if (dldu) (*dldu)[i] = -hu * inv_n;
      continue;
    }
    double y_hat = -INFINITY;
    for (double uj : u_grid) y_hat = std::max(y_hat, hamiltonian(p, s, t, w, h, pF, pB, d[i], uj));
    const double gap = y_hat - y;
    if (gap > 0.0) {
      const double sign = kind == ControlLoss::Shortfall ? 1.0 : -1.0;
      loss += sign * gap * inv_n;
      if (dldu) (*dldu)[i] = -sign * hu * inv_n;
    }
  }
  return loss;
}

std::vector<double> make_control_grid(std::size_t m, double uBar) {
  std::vector<double> g(m);
  for (std::size_t j = 0; j < m; ++j) g[j] = uBar * static_cast<double>(j) / static_cast<double>(m - 1);
  return g;
}

}  // namespace

double control_loss_me(const Mlp& value_net, const Mlp& control_net, const InputBatch& batch,
                       const ModelParams& p, const FeedingStrategy& s) {
  if (batch.n == 0) return 0.0;
  const auto d = value_gradients(value_net, batch);
  const auto u = control_values(control_net, batch, p.uBar);
  return control_loss_terms(ControlLoss::MeanHamiltonian, d, batch, u, {}, p, s, nullptr);
}

double control_loss_hinge(const Mlp& value_net, const Mlp& control_net, const InputBatch& batch,
                          std::span<const double> u_grid, const ModelParams& p, const FeedingStrategy& s,
                          bool literal) {
  if (u_grid.size() < 2) throw std::invalid_argument("control_loss_hinge: need at least 2 grid controls");
  if (batch.n == 0) return 0.0;
  const auto d = value_gradients(value_net, batch);
  const auto u = control_values(control_net, batch, p.uBar);
  return control_loss_terms(literal ? ControlLoss::LiteralHinge : ControlLoss::Shortfall, d, batch, u, u_grid, p,
                            s, nullptr);
}

LossRecord value_loss(const Mlp& value_net, const ControlSource& control, const SampledRegions& regions,
                      const ModelParams& p, const FeedingStrategy& s, std::span<double> grad) {
  LossRecord rec{regions.diag.epoch, 0.0, 0.0, 0.0, 0.0, 0.0};
  Tape tape;
  std::vector<double> adj;
  // PDE residual on the continuation region.
  if (regions.continuation.n > 0) {
    const InputBatch& b = regions.continuation;
    forward(value_net, b, residual_channels(), tape);
    const std::vector<double> u = residual_controls(tape, control, b, p, s);
    const std::size_t B = b.n;
    adj.assign(tape.n_channels * B, 0.0);
    const double inv_n = 1.0 / static_cast<double>(B);
    const std::size_t cF = tape.hess_channel(kPF), cB = tape.hess_channel(kPB);
    for (std::size_t i = 0; i < B; ++i) {
      const double t = b.at(kT, i), w = b.at(kW, i), h = b.at(kH, i), pF = b.at(kPF, i), pB = b.at(kPB, i);
      const double f = s.rate(t);
      const double r = pde_residual(p, s, t, w, h, pF, pB, derivatives_at(tape, i), u[i]);
      rec.pde += r * r * inv_n;
      const double g = 2.0 * r * inv_n;
      adj[i] = -p.r * g;
      adj[(1 + kT) * B + i] = g;
      adj[(1 + kW) * B + i] = weight_drift(t, w, f, u[i], p) * g;
      adj[(1 + kH) * B + i] = population_drift(t, h, f, u[i], p) * g;
      adj[(1 + kPF) * B + i] = p.r * pF * g;
      adj[(1 + kPB) * B + i] = p.r * pB * g;
      adj[cF * B + i] = 0.5 * p.sigmaF * p.sigmaF * pF * pF * g;
      adj[cB * B + i] = 0.5 * p.sigmaB * p.sigmaB * pB * pB * g;
    }
    backward(value_net, tape, adj, grad);
  }

  // Obstacle matching on the fuzzy boundary and at the horizon.
  auto match_obstacle = [&](const InputBatch& b) {
    if (b.n == 0) return 0.0;
    forward(value_net, b, ChannelSet::value_only(), tape);
    adj.assign(b.n, 0.0);
    const double inv_n = 1.0 / static_cast<double>(b.n);
    double loss = 0.0;
    for (std::size_t i = 0; i < b.n; ++i) {
      const double e = tape.value(i) - obstacle(b, i);
      loss += e * e * inv_n;
      adj[i] = 2.0 * e * inv_n;
    }
    backward(value_net, tape, adj, grad);
    return loss;
  };
  rec.fb = match_obstacle(regions.boundary);
  rec.terminal = match_obstacle(regions.terminal);
  return rec;
}

PinnResult train_value(const PinnConfig& cfg, ControlApproach approach, const SamplingBox& box,
                       const ModelParams& p, const FeedingStrategy& s) {
  cfg.validate();
  std::vector<std::size_t> widths{5};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(1);
  const std::vector<double> lo(box.lo.begin(), box.lo.end()), hi(box.hi.begin(), box.hi.end());

  PinnResult res;
  res.value = Mlp(widths, Activation::Tanh, OutputTransform::Identity, mix_seed(cfg.seed, 1));
  res.value.set_input_box(lo, hi);
  const bool with_control = approach != ControlApproach::Feedback;
  if (with_control) {
    res.control = Mlp(widths, Activation::Relu, OutputTransform::Abs, mix_seed(cfg.seed, 2));
    res.control->set_input_box(lo, hi);
  }
  std::mt19937_64 rng(mix_seed(cfg.seed, 3));
  AdamState adam(res.value.params().size());
  AdamState adam_ctrl(with_control ? res.control->params().size() : 0);
  std::vector<double> grad(res.value.params().size());
  std::vector<double> grad_ctrl(adam_ctrl.m.size());
  const std::vector<double> u_grid = make_control_grid(cfg.control_grid, p.uBar);
  const ControlLoss ctrl_kind = approach == ControlApproach::MeanHamiltonian ? ControlLoss::MeanHamiltonian
                                : cfg.literal_hinge                          ? ControlLoss::LiteralHinge
                                                                             : ControlLoss::Shortfall;
  double reference_loss = -1.0;
  Tape tape, ctape;
  std::vector<double> adj, dldu;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    SampledRegions reg = sample_regions(res.value, box, cfg, rng);
    reg.diag.epoch = epoch;
    std::fill(grad.begin(), grad.end(), 0.0);
    LossRecord rec{epoch, lr_schedule(epoch, cfg.lr0), 0.0, 0.0, 0.0, 0.0};

    const ControlSource src{with_control ? &*res.control : nullptr};
    const LossRecord parts = value_loss(res.value, src, reg, p, s, grad);
    rec.pde = parts.pde;
    rec.fb = parts.fb;
    rec.terminal = parts.terminal;

    const double total = rec.pde + rec.fb + rec.terminal;
    if (!std::isfinite(total)) {
      throw std::runtime_error("network training diverged: non-finite loss at epoch " + std::to_string(epoch));
    }
    if (epoch == cfg.divergence_epoch) reference_loss = total;
    if (reference_loss > 0.0 && epoch > cfg.divergence_epoch && total > cfg.divergence_factor * reference_loss) {
      throw std::runtime_error("network training diverged at epoch " + std::to_string(epoch) + ": loss " +
                               std::to_string(total) + " exceeds " + std::to_string(cfg.divergence_factor) +
                               " x its epoch-" + std::to_string(cfg.divergence_epoch) + " value");
    }
    adam_step(res.value.params(), grad, adam, rec.lr);

    if (with_control && reg.continuation.n > 0) {
      const InputBatch& b = reg.continuation;
      const std::vector<Derivatives> d = value_gradients(res.value, b);
      for (std::size_t k = 0; k < cfg.control_inner_steps; ++k) {
        forward(*res.control, b, ChannelSet::value_only(), ctape);
        std::vector<double> u(b.n);
        for (std::size_t i = 0; i < b.n; ++i) u[i] = std::min(ctape.value(i), p.uBar);
        rec.control = control_loss_terms(ctrl_kind, d, b, u, u_grid, p, s, &dldu);
        // The clamp at uBar passes no gradient.
        for (std::size_t i = 0; i < b.n; ++i) {
          if (ctape.value(i) > p.uBar) dldu[i] = 0.0;
        }
        std::fill(grad_ctrl.begin(), grad_ctrl.end(), 0.0);
        backward(*res.control, ctape, dldu, grad_ctrl);
        adam_step(res.control->params(), grad_ctrl, adam_ctrl, cfg.control_lr);
      }
    }
    res.history.push_back(rec);
    res.sampling.push_back(reg.diag);
  }
  return res;
}

void write_loss_history_csv(const std::vector<LossRecord>& history, std::ostream& out) {
  out << "epoch,lr,L_PDE,L_FB,L_T,L_ctrl\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.epoch, r.lr, r.pde, r.fb, r.terminal,
                  r.control);
    out << buf;
  }
}

void write_sampling_csv(const std::vector<SamplingDiagnostics>& diag, std::ostream& out) {
  out << "epoch,rounds,drawn,continuation,boundary,continuation_rate,boundary_rate,starved\n";
  char buf[256];
  for (const auto& d : diag) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%zu,%.6g,%.6g,%d\n", d.epoch, d.rounds, d.drawn, d.continuation,
                  d.boundary, d.continuation_rate(), d.boundary_rate(), d.starved ? 1 : 0);
    out << buf;
  }
}

void PinnFeedbackPolicy::controls(std::size_t, double t, const StateView& x, std::span<double> u) const {
  const InputBatch in = make_inputs(t, x);
  ChannelSet cs;
  cs.grad = {kW, kH};
  thread_local Tape tape;
  forward(*net_, in, cs, tape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    u[i] = std::clamp(feedback_control(tape.out(1, i), tape.out(2, i), t, x.w[i], x.h[i], x.pF[i], x.pB[i], p_, s_),
                      0.0, p_.uBar);
  }
}

void ControlNetPolicy::controls(std::size_t, double t, const StateView& x, std::span<double> u) const {
  const std::vector<double> v = predict(*net_, make_inputs(t, x));
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = std::clamp(v[i], 0.0, uBar_);
}

void ThresholdStop::decide(std::size_t, double t, const StateView& x, std::span<std::uint8_t> stop) const {
  const std::vector<double> v = predict(*net_, make_inputs(t, x));
  for (std::size_t i = 0; i < x.size(); ++i) {
    stop[i] = v[i] <= terminal_reward(t, x.w[i], x.h[i], x.pF[i], x.pB[i]) + eps_ ? 1 : 0;
  }
}

ThresholdStop threshold_stopping(const Mlp& value_net, double eps_stop) { return ThresholdStop(value_net, eps_stop); }

}  // namespace aquaopt
