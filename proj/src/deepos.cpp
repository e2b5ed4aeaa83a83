#include "aquaopt/deepos.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace aquaopt {

void DeepOsConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid stopping-network settings: ") + what);
  };
  require(stride >= 1, "stride must be positive");
  require(!hidden.empty(), "need at least one hidden layer");
  require(batch >= 1 && validation_paths >= 2, "batch sizes must be positive");
  require(lr > 0.0, "learning rate must be positive");
}

namespace {

constexpr std::size_t kFeatures = 6;

InputBatch features(double t, const StateView& x) {
  InputBatch in(kFeatures, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    in.at(0, i) = t;
    in.at(1, i) = x.w[i];
    in.at(2, i) = x.h[i];
    in.at(3, i) = x.pF[i];
    in.at(4, i) = x.pB[i];
    in.at(5, i) = terminal_reward(t, x.w[i], x.h[i], x.pF[i], x.pB[i]);
  }
  return in;
}

// Input box mean -/+ std per feature, so inputs are standardised.
void standardise(Mlp& net, const InputBatch& in) {
  std::vector<double> lo(kFeatures), hi(kFeatures);
  for (std::size_t f = 0; f < kFeatures; ++f) {
    double mean = 0.0;
    for (std::size_t i = 0; i < in.n; ++i) mean += in.at(f, i);
    mean /= static_cast<double>(in.n);
    double var = 0.0;
    for (std::size_t i = 0; i < in.n; ++i) var += (in.at(f, i) - mean) * (in.at(f, i) - mean);
    double sd = std::sqrt(var / static_cast<double>(in.n));
    if (!(sd > 1e-12 * (std::abs(mean) + 1.0))) sd = 1.0;
    lo[f] = mean - sd;
    hi[f] = mean + sd;
  }
  net.set_input_box(std::move(lo), std::move(hi));
}

StateView tape_view(const StateTape& tape, std::size_t d) {
  const std::size_t off = d * tape.n_paths;
  auto slice = [&](const std::vector<double>& v) { return std::span<const double>(v.data() + off, tape.n_paths); };
  return StateView{slice(tape.w), slice(tape.h), slice(tape.pF), slice(tape.pB)};
}

}  // namespace

DeepOsRule::DeepOsRule(std::size_t n_steps, std::vector<std::size_t> decision_steps, std::vector<Mlp> nets)
    : n_steps_(n_steps), steps_(std::move(decision_steps)), nets_(std::move(nets)) {
  if (steps_.empty() || nets_.size() + 1 != steps_.size()) {
    throw std::invalid_argument("DeepOsRule: need one network per decision time except the last");
  }
  if (!std::is_sorted(steps_.begin(), steps_.end()) || steps_.back() > n_steps_) {
    throw std::invalid_argument("DeepOsRule: decision steps must be sorted and within the path grid");
  }
}

std::size_t DeepOsRule::latest_step(std::size_t n_steps) const {
  if (n_steps != n_steps_) {
    throw std::invalid_argument("DeepOsRule: trained on " + std::to_string(n_steps_) + " path steps, evaluated on " +
                                std::to_string(n_steps));
  }
  return steps_.back();
}

std::vector<double> DeepOsRule::probabilities(std::size_t d, double t, const StateView& x) const {
  return predict(nets_.at(d), features(t, x));
}

void DeepOsRule::decide(std::size_t step, double t, const StateView& x, std::span<std::uint8_t> stop) const {
  const auto it = std::lower_bound(steps_.begin(), steps_.end(), step);
  if (it == steps_.end() || *it != step) {
    std::fill(stop.begin(), stop.end(), std::uint8_t{0});
    return;
  }
  const auto d = static_cast<std::size_t>(it - steps_.begin());
  if (d + 1 == steps_.size()) {
    std::fill(stop.begin(), stop.end(), std::uint8_t{1});
    return;
  }
  const std::vector<double> prob = probabilities(d, t, x);
  for (std::size_t i = 0; i < stop.size(); ++i) stop[i] = prob[i] >= 0.5 ? 1 : 0;
}

DeepOsTraining train_deepos(const PathBatch& paths, const ControlPolicy& policy, const ModelParams& p,
                            const FeedingStrategy& s, const DeepOsConfig& cfg, std::size_t last_step) {
  cfg.validate();
  if (last_step == 0 || last_step > paths.n_steps) {
    throw std::invalid_argument("train_deepos: last decision step outside the path grid");
  }
  const StateTape tape = record_states(paths, policy, p, s, cfg.stride, last_step);
  const std::size_t nd = tape.n_decisions();
  const std::size_t np = tape.n_paths;
  std::vector<double> realised(np), payoff(np);
  for (std::size_t i = 0; i < np; ++i) realised[i] = tape.stop_value(nd - 1, i);

  std::vector<std::size_t> widths{kFeatures};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(1);
  std::vector<Mlp> nets(nd - 1);
  DeepOsTraining out;
  std::mt19937_64 rng(mix_seed(cfg.seed, 11));
  const std::size_t b = std::min(cfg.batch, np);
  std::uniform_int_distribution<std::size_t> pick(0, np - 1);
  std::vector<double> grad, adj(b);
  Tape tape_nn;

  for (std::size_t d = nd - 1; d-- > 0;) {
    const double t = tape.times[d];
    const InputBatch x = features(t, tape_view(tape, d));
    for (std::size_t i = 0; i < np; ++i) payoff[i] = tape.stop_value(d, i);
    // Warm start from the next decision's network.
    Mlp net = d + 2 == nd || !cfg.warm_start ? Mlp(widths, Activation::Relu, OutputTransform::Sigmoid, mix_seed(cfg.seed, 100 + d))
                          : nets[d + 1];
    standardise(net, x);
    AdamState adam(net.params().size());
    grad.assign(net.params().size(), 0.0);
    InputBatch mb(kFeatures, b);
    std::vector<std::size_t> idx(b);
    for (std::size_t k = 0; k < cfg.steps_per_decision; ++k) {
      for (std::size_t j = 0; j < b; ++j) {
        idx[j] = b == np ? j : pick(rng);
        for (std::size_t f = 0; f < kFeatures; ++f) mb.at(f, j) = x.at(f, idx[j]);
      }
      forward(net, mb, ChannelSet::value_only(), tape_nn);
      // loss = -mean(F G + (1 - F) Y)
      for (std::size_t j = 0; j < b; ++j) adj[j] = -(payoff[idx[j]] - realised[idx[j]]) / static_cast<double>(b);
      std::fill(grad.begin(), grad.end(), 0.0);
      backward(net, tape_nn, adj, grad);
      adam_step(net.params(), grad, adam, cfg.lr);
    }
    const std::vector<double> prob = predict(net, x);
    double mean = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      if (prob[i] >= 0.5) realised[i] = payoff[i];
      mean += realised[i];
    }
    out.in_sample_value.push_back(mean / static_cast<double>(np));
    nets[d] = std::move(net);
  }
  out.rule = DeepOsRule(paths.n_steps, tape.steps, std::move(nets));
  return out;
}

FixedTimeScan fixed_time_scan(const StateTape& tape) {
  FixedTimeScan scan;
  const double n = static_cast<double>(tape.n_paths);
  for (std::size_t d = 0; d < tape.n_decisions(); ++d) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < tape.n_paths; ++i) sum += tape.stop_value(d, i);
    const double mean = sum / n;
    for (std::size_t i = 0; i < tape.n_paths; ++i) sq += (tape.stop_value(d, i) - mean) * (tape.stop_value(d, i) - mean);
    scan.times.push_back(tape.times[d]);
    scan.mean.push_back(mean);
    scan.stderr_.push_back(tape.n_paths > 1 ? std::sqrt(sq / (n - 1.0) / n) : 0.0);
    if (scan.mean[d] > scan.mean[scan.best]) scan.best = d;
  }
  return scan;
}

DeepOsOutcome run_deepos(const PathBatch& paths, const ControlPolicy& policy, const ModelParams& p,
                         const FeedingStrategy& s, const DeepOsConfig& cfg, std::size_t last_step, bool scan) {
  DeepOsOutcome out;
  out.training = train_deepos(paths, policy, p, s, cfg, last_step);
  PathBatch fresh;
  if (!cfg.in_sample) fresh = simulate_price_paths(p, cfg.validation_paths, paths.n_steps, cfg.validation_seed);
  const PathBatch& eval = cfg.in_sample ? paths : fresh;
  out.report = evaluate_farm_value(eval, policy, out.training.rule, p, s);
  if (scan) {
    out.scan = fixed_time_scan(record_states(eval, policy, p, s, cfg.stride, last_step));
    out.below_fixed_time = out.report.mean < out.scan.mean[out.scan.best];
  }
  return out;
}

DeepOsOutcome refine_pinn_stopping(const ControlPolicy& network_control, const PathBatch& paths,
                                   const ModelParams& p, const FeedingStrategy& s, const DeepOsConfig& cfg,
                                   bool scan) {
  return run_deepos(paths, network_control, p, s, cfg, paths.n_steps, scan);
}

namespace {

constexpr char kMagic[8] = {'A', 'Q', 'D', 'O', 'S', '0', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("load_rule: truncated input");
  return v;
}

}  // namespace

void save_rule(const DeepOsRule& rule, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put_u64(out, rule.n_steps());
  put_u64(out, rule.decision_steps().size());
  for (std::size_t s : rule.decision_steps()) put_u64(out, s);
  for (const Mlp& net : rule.nets()) save_checkpoint(net, out);
  if (!out) throw std::runtime_error("save_rule: write failed");
}

DeepOsRule load_rule(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("load_rule: bad magic");
  const std::size_t n_steps = get_u64(in);
  const std::size_t nd = get_u64(in);
  if (nd == 0 || nd > n_steps + 1) throw std::runtime_error("load_rule: implausible decision count");
  std::vector<std::size_t> steps(nd);
  for (auto& s : steps) s = get_u64(in);
  std::vector<Mlp> nets;
  for (std::size_t d = 0; d + 1 < nd; ++d) nets.push_back(load_checkpoint(in));
  return DeepOsRule(n_steps, std::move(steps), std::move(nets));
}

}  // namespace aquaopt
