#include "aquaopt/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include <json.hpp>

#include "aquaopt/parallel.hpp"
#include "aquaopt/simd/kernels.hpp"

namespace aquaopt {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "aquaopt 1.0.0";
// Bumped whenever a cached artifact's meaning changes.
constexpr const char* kCacheVersion = "cache-4";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Binary PINN cache: value checkpoint, optional control checkpoint, loss
// history and sampling diagnostics.
constexpr char kPinnMagic[8] = {'A', 'Q', 'P', 'I', 'N', 'N', '0', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("pinn cache: truncated file");
  return v;
}

void save_pinn(const PinnResult& r, std::ostream& out) {
  out.write(kPinnMagic, sizeof kPinnMagic);
  save_checkpoint(r.value, out);
  put<std::uint8_t>(out, r.control ? 1 : 0);
  if (r.control) save_checkpoint(*r.control, out);
  put<std::uint64_t>(out, r.history.size());
  for (const auto& h : r.history) {
    put<std::uint64_t>(out, h.epoch);
    for (double v : {h.lr, h.pde, h.fb, h.terminal, h.control}) put(out, v);
  }
  put<std::uint64_t>(out, r.sampling.size());
  for (const auto& d : r.sampling) {
    for (std::uint64_t v : {d.epoch, d.rounds, d.drawn, d.continuation, d.boundary}) put(out, v);
    put<std::uint8_t>(out, d.starved ? 1 : 0);
  }
}

PinnResult load_pinn(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::string(magic, 8) != std::string(kPinnMagic, 8)) throw std::runtime_error("pinn cache: bad magic");
  PinnResult r{load_checkpoint(in), std::nullopt, {}, {}};
  if (get<std::uint8_t>(in)) r.control = load_checkpoint(in);
  const auto nh = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < nh; ++i) {
    LossRecord h{};
    h.epoch = get<std::uint64_t>(in);
    h.lr = get<double>(in);
    h.pde = get<double>(in);
    h.fb = get<double>(in);
    h.terminal = get<double>(in);
    h.control = get<double>(in);
    r.history.push_back(h);
  }
  const auto ns = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < ns; ++i) {
    SamplingDiagnostics d;
    d.epoch = get<std::uint64_t>(in);
    d.rounds = get<std::uint64_t>(in);
    d.drawn = get<std::uint64_t>(in);
    d.continuation = get<std::uint64_t>(in);
    d.boundary = get<std::uint64_t>(in);
    d.starved = get<std::uint8_t>(in) != 0;
    r.sampling.push_back(d);
  }
  return r;
}

}  // namespace

ReportRow make_row(const std::string& scenario, const EvaluationReport& report, std::optional<double> reference) {
  ReportRow row{scenario, report.mean_stopping_time, report.mean, report.stderr_, std::nullopt};
  if (reference) row.diff_vs_fd6 = std::abs(report.mean - *reference);
  return row;
}

void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
  out << "scenario,E_tau,J_mean,J_stderr,diff_vs_fd6\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << fmt(r.E_tau) << ',' << fmt(r.J_mean) << ',' << fmt(r.J_stderr) << ',';
    if (r.diff_vs_fd6) out << fmt(*r.diff_vs_fd6);
    out << '\n';
  }
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_file_atomic(const std::string& path, const std::string& text) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + tmp);
  }
  fs::rename(tmp, target);
}

Experiment::Experiment(ExperimentConfig cfg, bool use_cache)
    : cfg_(std::move(cfg)), p_(cfg_.model.normalized()), use_cache_(use_cache) {
  cfg_.validate();
  set_thread_count(cfg_.run.threads);
}

const PathBatch& Experiment::paths() {
  if (!paths_) {
    paths_ = std::make_unique<PathBatch>(
        simulate_price_paths(p_, cfg_.run.n_paths, cfg_.run.n_steps, cfg_.run.seed));
  }
  return *paths_;
}

const PathBatch& Experiment::training_paths() {
  if (cfg_.deepos.in_sample) return paths();
  if (!training_paths_) {
    training_paths_ = std::make_unique<PathBatch>(
        simulate_price_paths(p_, cfg_.run.n_paths, cfg_.run.n_steps, mix_seed(cfg_.run.seed, 0x7ea1)));
  }
  return *training_paths_;
}

double Experiment::tau1() const {
  return biomass_peak_time(cfg_.feeding, p_, p_.T / static_cast<double>(cfg_.run.n_steps));
}

std::size_t Experiment::tau1_step() const {
  return FixedStepStop::at_time(tau1(), p_.T / static_cast<double>(cfg_.run.n_steps)).step();
}

std::string Experiment::settings_text(std::initializer_list<const char*> sections) const {
  std::ostringstream all;
  write_config(cfg_, all);
  const std::string text = all.str();
  std::string out = kCacheVersion;
  for (const char* name : sections) {
    const std::string head = std::string("[") + name + "]";
    const auto b = text.find(head);
    if (b == std::string::npos) continue;
    const auto e = text.find("\n[", b);
    out += text.substr(b, e == std::string::npos ? std::string::npos : e - b);
  }
  return out;
}

std::string Experiment::cache_path(const std::string& kind, const std::string& key) const {
  return (fs::path(cfg_.run.out_dir) / "cache" / (kind + "-" + key)).string();
}

std::string Experiment::out_path(const std::string& name) const {
  fs::create_directories(cfg_.run.out_dir);
  return (fs::path(cfg_.run.out_dir) / name).string();
}

const FdSolution& Experiment::fd_solution(FdMode mode, double horizon) {
  const std::string key =
      hex(fnv1a(settings_text({"model", "feeding", "grid"}) + (mode == FdMode::ControlOnly ? "control" : "vi") +
                fmt(horizon)));
  if (auto it = fd_.find(key); it != fd_.end()) return *it->second;
  const std::string path = cache_path("fd", key + ".bin");
  std::unique_ptr<FdSolution> sol;
  if (use_cache_ && fs::exists(path)) {
    std::ifstream f(path, std::ios::binary);
    sol = std::make_unique<FdSolution>(read_solution(f));
  } else {
    SolveOptions opt;
    opt.mode = mode;
    opt.horizon = horizon;
    opt.policy_stride = cfg_.policy_stride;
    opt.allow_unstable = cfg_.allow_unstable;
    sol = std::make_unique<FdSolution>(solve(cfg_.grid, p_, cfg_.feeding, opt));
    if (use_cache_) {
      std::ostringstream buf;
      write_solution(*sol, buf);
      write_file_atomic(path, buf.str());
    }
  }
  return *(fd_[key] = std::move(sol));
}

const PinnResult& Experiment::pinn(ControlApproach approach) {
  const int a = static_cast<int>(approach);
  if (auto it = pinn_.find(a); it != pinn_.end()) return *it->second;
  const std::string key = hex(fnv1a(settings_text({"model", "feeding", "grid", "pinn"}) + std::to_string(a) +
                                    std::string(simd::isa_name(simd::active_isa()))));
  const std::string path = cache_path("pinn" + std::to_string(a), key + ".bin");
  std::unique_ptr<PinnResult> res;
  if (use_cache_ && fs::exists(path)) {
    std::ifstream f(path, std::ios::binary);
    res = std::make_unique<PinnResult>(load_pinn(f));
  } else {
    res = std::make_unique<PinnResult>(
        train_value(cfg_.pinn, approach, SamplingBox::from_grid(cfg_.grid, p_), p_, cfg_.feeding));
    if (use_cache_) {
      std::ostringstream buf;
      save_pinn(*res, buf);
      write_file_atomic(path, buf.str());
    }
  }
  return *(pinn_[a] = std::move(res));
}

const DeepOsRule& Experiment::deepos_rule(const std::string& policy_id, const ControlPolicy& policy,
                                          std::size_t last_step) {
  const std::string key = hex(fnv1a(
      settings_text({"model", "feeding", "deepos"}) + policy_id + "|" + std::to_string(last_step) + "|" +
      std::to_string(cfg_.run.seed) + "|" + std::to_string(cfg_.run.n_paths) + "|" +
      std::to_string(cfg_.run.n_steps) + "|" + std::string(simd::isa_name(simd::active_isa()))));
  if (auto it = rules_.find(key); it != rules_.end()) return *it->second;
  const std::string path = cache_path("deepos", key + ".bin");
  std::unique_ptr<DeepOsRule> rule;
  if (use_cache_ && fs::exists(path)) {
    std::ifstream f(path, std::ios::binary);
    rule = std::make_unique<DeepOsRule>(load_rule(f));
  } else {
    rule = std::make_unique<DeepOsRule>(
        train_deepos(training_paths(), policy, p_, cfg_.feeding, cfg_.deepos, last_step).rule);
    if (use_cache_) {
      std::ostringstream buf;
      save_rule(*rule, buf);
      write_file_atomic(path, buf.str());
    }
  }
  return *(rules_[key] = std::move(rule));
}

std::vector<std::string> Experiment::scenario_ids() {
  return {"bench-u0-tau0", "bench-u0-tau1", "bench-u0-tau2", "bench-uf-tau0", "bench-uf-tau1", "bench-uf-tau2",
          "fd-1",          "fd-2",          "fd-3",          "fd-4",          "fd-5",          "fd-6",
          "pinn-1",        "pinn-2",        "pinn-3",        "pinn-deepos-1", "pinn-deepos-2", "pinn-deepos-3"};
}

Strategy Experiment::strategy(const std::string& id) {
  const std::size_t n = cfg_.run.n_steps;
  auto borrowed = [](const DeepOsRule& r) { return std::shared_ptr<const StoppingRule>(std::shared_ptr<void>{}, &r); };

  if (id.rfind("bench-", 0) == 0 && id.size() == 13) {
    const std::string u = id.substr(6, 2), tau = id.substr(9);
    std::shared_ptr<const ControlPolicy> policy;
    if (u == "u0") policy = std::make_shared<ConstantPolicy>(0.0);
    else if (u == "uf") policy = std::make_shared<BiologicalFeedingPolicy>(cfg_.feeding);
    if (policy) {
      if (tau == "tau0") return {policy, std::make_shared<NoStop>()};
      if (tau == "tau1") return {policy, std::make_shared<FixedStepStop>(tau1_step())};
      if (tau == "tau2") return {policy, borrowed(deepos_rule("bench-" + u, *policy, n))};
    }
  }
  if (id.rfind("fd-", 0) == 0 && id.size() == 4 && id[3] >= '1' && id[3] <= '6') {
    const int k = id[3] - '0';
    if (k <= 3) {
      const FdSolution& sol = fd_solution(FdMode::ControlOnly, p_.T);
      auto policy = std::make_shared<FdPolicy>(sol, p_.uBar);
      if (k == 1) return {policy, std::make_shared<NoStop>()};
      if (k == 2) return {policy, std::make_shared<FixedStepStop>(tau1_step())};
      return {policy, borrowed(deepos_rule("fd-hat:" + fmt(sol.v0_at_x0) + fmt(sol.horizon()), *policy, n))};
    }
    if (k <= 5) {
      const FdSolution& sol = fd_solution(FdMode::ControlOnly, tau1());
      auto policy = std::make_shared<FdPolicy>(sol, p_.uBar);
      if (k == 4) return {policy, std::make_shared<FixedStepStop>(tau1_step())};
      return {policy,
              borrowed(deepos_rule("fd-tilde:" + fmt(sol.v0_at_x0) + fmt(sol.horizon()), *policy, tau1_step()))};
    }
    const FdSolution& sol = fd_vi();
    return {std::make_shared<FdPolicy>(sol, p_.uBar),
            std::make_shared<FdValueStop>(stopping_rule_from_value(sol, cfg_.fd_stop_eps, p_.T))};
  }
  const bool learned = id.rfind("pinn-deepos-", 0) == 0 && id.size() == 13;
  if ((id.rfind("pinn-", 0) == 0 && id.size() == 6) || learned) {
    const char c = id.back();
    if (c >= '1' && c <= '3') {
      const auto approach = static_cast<ControlApproach>(c - '0');
      const PinnResult& res = pinn(approach);
      std::shared_ptr<const ControlPolicy> policy;
      if (approach == ControlApproach::Feedback) {
        policy = std::make_shared<PinnFeedbackPolicy>(res.value, p_, cfg_.feeding);
      } else {
        policy = std::make_shared<ControlNetPolicy>(*res.control, p_.uBar);
      }
      if (!learned) return {policy, std::make_shared<ThresholdStop>(threshold_stopping(res.value, cfg_.pinn.stop_eps))};
      std::ostringstream ck;
      save_checkpoint(res.value, ck);
      if (res.control) save_checkpoint(*res.control, ck);
      return {policy, borrowed(deepos_rule("pinn-" + std::string(1, c) + ":" + hex(fnv1a(ck.str())), *policy, n))};
    }
  }
  throw std::invalid_argument("unknown scenario '" + id + "'");
}

EvaluationReport Experiment::evaluate(const std::string& id, const std::vector<std::size_t>& record_paths) {
  const Strategy s = strategy(id);
  EvaluationOptions opt;
  opt.record_paths = record_paths;
  EvaluationReport r = evaluate_farm_value(paths(), *s.policy, *s.rule, p_, cfg_.feeding, opt);
  r.scale(scale());
  return r;
}

ReportRow Experiment::row(const std::string& id, std::optional<double> reference) {
  return make_row(id, evaluate(id), reference);
}

std::vector<ReportRow> run_benchmarks(Experiment& ex) {
  std::vector<ReportRow> rows;
  for (const char* u : {"u0", "uf"}) {
    for (const char* tau : {"tau0", "tau1", "tau2"}) rows.push_back(ex.row(std::string("bench-") + u + "-" + tau));
  }
  return rows;
}

std::vector<ReportRow> run_fd_scenarios(Experiment& ex) {
  std::vector<ReportRow> rows;
  for (int k = 1; k <= 6; ++k) rows.push_back(ex.row("fd-" + std::to_string(k)));
  return rows;
}

std::vector<ReportRow> run_pinn_tables(Experiment& ex, bool threshold, bool learned) {
  const double ref = ex.row("fd-6").J_mean;
  std::vector<ReportRow> rows;
  for (int a = 1; a <= 3 && threshold; ++a) rows.push_back(ex.row("pinn-" + std::to_string(a), ref));
  for (int a = 1; a <= 3 && learned; ++a) rows.push_back(ex.row("pinn-deepos-" + std::to_string(a), ref));
  return rows;
}

ExperimentConfig appendix_config(const ExperimentConfig& base, const std::string& variant) {
  static const std::map<std::string, std::string> kinds{
      {"efr", "exponential"}, {"lfr", "logistic"}, {"sfr", "sinusoidal"}};
  const auto it = kinds.find(variant);
  if (it == kinds.end()) throw std::invalid_argument("unknown feeding variant '" + variant + "'");
  ExperimentConfig cfg = base;
  double f0 = 0.1;
  std::visit([&](const auto& v) { f0 = v.f0; }, base.feeding.variant());
  cfg.feeding = default_feeding(it->second, f0, base.model.T);
  return cfg;
}

std::vector<ReportRow> run_appendix(const ExperimentConfig& base, const std::string& variant, bool use_cache) {
  Experiment ex(appendix_config(base, variant), use_cache);
  const std::string prefix = "appendix-" + variant + "-";
  std::vector<ReportRow> rows;
  ReportRow bench = ex.row("bench-uf-tau2");
  bench.scenario = prefix + "benchmark";
  rows.push_back(bench);
  ReportRow fd = ex.row("fd-6");
  fd.scenario = prefix + "fd";
  rows.push_back(fd);
  for (int a = 1; a <= 3; ++a) {
    ReportRow r = ex.row("pinn-deepos-" + std::to_string(a), fd.J_mean);
    r.scenario = prefix + "pinn-deepos-" + std::to_string(a);
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::string> emit_trajectory(Experiment& ex, const std::string& id,
                                         const std::vector<std::size_t>& paths) {
  for (std::size_t i : paths) {
    if (i >= ex.config().run.n_paths) {
      throw std::invalid_argument("trajectory path index " + std::to_string(i) + " out of range");
    }
  }
  const EvaluationReport r = ex.evaluate(id, paths);
  std::vector<std::string> files;
  for (std::size_t i : paths) {
    std::ostringstream out;
    write_trajectory_csv(r.trajectories.at(i), out);
    const std::string name = "trajectory_" + id + "_path" + std::to_string(i) + ".csv";
    write_file_atomic(ex.out_path(name), out.str());
    files.push_back(name);
  }
  return files;
}

void write_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& command,
                    const std::vector<std::string>& outputs) {
  std::ostringstream ini;
  write_config(cfg, ini);
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["compiler"] = __VERSION__;
  j["isa"] = std::string(simd::isa_name(simd::active_isa()));
  j["command"] = command;
  j["preset"] = cfg.preset;
  j["seeds"] = {{"paths", cfg.run.seed},
                {"pinn", cfg.pinn.seed},
                {"deepos", cfg.deepos.seed},
                {"deepos_validation", cfg.deepos.validation_seed}};
  j["threads"] = cfg.run.threads;
  j["outputs"] = outputs;
  j["config"] = ini.str();
  const fs::path dir(cfg.run.out_dir);
  write_file_atomic((dir / "config.ini").string(), ini.str());
  write_file_atomic((dir / "manifest.json").string(), j.dump(2) + "\n");
}

}  // namespace aquaopt
