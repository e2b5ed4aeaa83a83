#include "aquaopt/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace aquaopt {

namespace pt = boost::property_tree;

ExperimentConfig ExperimentConfig::preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.feeding = FeedingStrategy::linear(0.1, 0.3);
  if (name == "paper") {
    c.grid = GridSpec::paper(c.model);
  } else if (name == "desk") {
    c.grid = GridSpec::desk(c.model);
    c.pinn.epochs = 2000;
    c.pinn.batch = 1024;
    c.pinn.pool = 4096;
    c.deepos.stride = 32;
    c.deepos.steps_per_decision = 150;
    c.deepos.batch = 1024;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected paper or desk)");
  }
  return c;
}

void ExperimentConfig::validate() const {
  model.validate(feeding);
  grid.validate();
  pinn.validate();
  deepos.validate();
  if (policy_stride == 0) throw std::invalid_argument("grid: policy_stride must be positive");
  if (!(fd_stop_eps >= 0.0)) throw std::invalid_argument("grid: stop_eps must be nonnegative");
  if (run.n_paths < 2 || run.n_steps < 1) throw std::invalid_argument("run: need at least 2 paths and 1 step");
  if (run.threads < 1) throw std::invalid_argument("run: threads must be at least 1");
  for (std::size_t i : run.trajectory_paths) {
    if (i >= run.n_paths) throw std::invalid_argument("run: trajectory path index out of range");
  }
}

FeedingStrategy default_feeding(const std::string& kind, double f0, double T) {
  if (kind == "linear") return FeedingStrategy::linear(f0, (1.0 - f0) / T);
  if (kind == "exponential") return FeedingStrategy::normalized_exponential(f0, T);
  if (kind == "logistic") return FeedingStrategy::default_logistic(f0, T);
  if (kind == "sinusoidal") return FeedingStrategy::normalized_sinusoidal(f0, T);
  throw std::invalid_argument("feeding: unknown kind '" + kind + "'");
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || s.find_first_not_of(" \t", pos) != std::string::npos) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& s) {
  const std::string t = s.substr(0, s.find_last_not_of(" \t") + 1);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("config: '" + key + "' expects a nonnegative integer, got '" + s + "'");
  }
  return std::stoull(t);
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects true or false, got '" + s + "'");
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(to_uint(key, item.substr(b)));
  }
  return out;
}

std::string list_str(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

using Section = std::vector<std::pair<std::string, Field>>;

template <typename Get>
Field dbl(Get g) {
  return {[g](const ExperimentConfig& c) { return fmt(g(const_cast<ExperimentConfig&>(c))); },
          [g](ExperimentConfig& c, const std::string& s) { g(c) = to_double("value", s); }};
}

template <typename Get>
Field uint(Get g) {
  return {[g](const ExperimentConfig& c) { return std::to_string(g(const_cast<ExperimentConfig&>(c))); },
          [g](ExperimentConfig& c, const std::string& s) {
            g(c) = static_cast<std::remove_reference_t<decltype(g(c))>>(to_uint("value", s));
          }};
}

template <typename Get>
Field boolean(Get g) {
  return {[g](const ExperimentConfig& c) { return std::string(g(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); },
          [g](ExperimentConfig& c, const std::string& s) { g(c) = to_bool("value", s); }};
}

template <typename Get>
Field list(Get g) {
  return {[g](const ExperimentConfig& c) { return list_str(g(const_cast<ExperimentConfig&>(c))); },
          [g](ExperimentConfig& c, const std::string& s) { g(c) = to_list("value", s); }};
}

#define AQ_D(expr) dbl([](ExperimentConfig& c) -> double& { return expr; })
#define AQ_U(type, expr) uint([](ExperimentConfig& c) -> type& { return expr; })
#define AQ_B(expr) boolean([](ExperimentConfig& c) -> bool& { return expr; })
#define AQ_L(expr) list([](ExperimentConfig& c) -> std::vector<std::size_t>& { return expr; })

Field axis_n(AxisSpec GridSpec::* axis) {
  return {[axis](const ExperimentConfig& c) { return std::to_string((c.grid.*axis).n); },
          [axis](ExperimentConfig& c, const std::string& s) { (c.grid.*axis).n = to_uint("grid", s); }};
}
Field axis_bound(AxisSpec GridSpec::* axis, bool hi) {
  return {[axis, hi](const ExperimentConfig& c) { return fmt(hi ? (c.grid.*axis).hi : (c.grid.*axis).lo); },
          [axis, hi](ExperimentConfig& c, const std::string& s) {
            (hi ? (c.grid.*axis).hi : (c.grid.*axis).lo) = to_double("grid", s);
          }};
}

const std::map<std::string, Section>& registry() {
  static const std::map<std::string, Section> reg = [] {
    std::map<std::string, Section> r;
    r["model"] = {
        {"h0", AQ_D(c.model.h0)},         {"w0", AQ_D(c.model.w0)},       {"pF0", AQ_D(c.model.pF0)},
        {"pB0", AQ_D(c.model.pB0)},       {"mu", AQ_D(c.model.mu)},       {"muF", AQ_D(c.model.muF)},
        {"gamma", AQ_D(c.model.gamma)},   {"gammaF", AQ_D(c.model.gammaF)}, {"wInf", AQ_D(c.model.wInf)},
        {"nu", AQ_D(c.model.nu)},         {"r", AQ_D(c.model.r)},         {"sigmaF", AQ_D(c.model.sigmaF)},
        {"sigmaB", AQ_D(c.model.sigmaB)}, {"T", AQ_D(c.model.T)},         {"uBar", AQ_D(c.model.uBar)},
        {"growth_law",
         {[](const ExperimentConfig& c) {
            return std::string(c.model.growth == GrowthLaw::Richards ? "richards" : "affine");
          },
          [](ExperimentConfig& c, const std::string& s) {
            if (s == "richards") c.model.growth = GrowthLaw::Richards;
            else if (s == "affine") c.model.growth = GrowthLaw::Affine;
            else throw std::invalid_argument("config: growth_law must be richards or affine");
          }}},
        {"cost_convention",
         {[](const ExperimentConfig& c) {
            return std::string(c.model.cost_convention == CostConvention::Undiscounted ? "undiscounted"
                                                                                      : "discounted");
          },
          [](ExperimentConfig& c, const std::string& s) {
            if (s == "undiscounted") c.model.cost_convention = CostConvention::Undiscounted;
            else if (s == "discounted") c.model.cost_convention = CostConvention::Discounted;
            else throw std::invalid_argument("config: cost_convention must be undiscounted or discounted");
          }}},
    };
    r["grid"] = {
        {"n_time", AQ_U(std::size_t, c.grid.n_time)},
        {"w_lo", axis_bound(&GridSpec::w, false)},   {"w_hi", axis_bound(&GridSpec::w, true)},
        {"w_n", axis_n(&GridSpec::w)},               {"h_lo", axis_bound(&GridSpec::h, false)},
        {"h_hi", axis_bound(&GridSpec::h, true)},    {"h_n", axis_n(&GridSpec::h)},
        {"pF_lo", axis_bound(&GridSpec::pF, false)}, {"pF_hi", axis_bound(&GridSpec::pF, true)},
        {"pF_n", axis_n(&GridSpec::pF)},             {"pB_lo", axis_bound(&GridSpec::pB, false)},
        {"pB_hi", axis_bound(&GridSpec::pB, true)},  {"pB_n", axis_n(&GridSpec::pB)},
        {"u_lo", axis_bound(&GridSpec::u, false)},   {"u_hi", axis_bound(&GridSpec::u, true)},
        {"u_n", axis_n(&GridSpec::u)},
        {"policy_stride", AQ_U(std::size_t, c.policy_stride)},
        {"stop_eps", AQ_D(c.fd_stop_eps)},
        {"allow_unstable", AQ_B(c.allow_unstable)},
    };
    r["pinn"] = {
        {"batch", AQ_U(std::size_t, c.pinn.batch)},
        {"epochs", AQ_U(std::size_t, c.pinn.epochs)},
        {"fuzzy_eps", AQ_D(c.pinn.fuzzy_eps)},
        {"control_inner_steps", AQ_U(std::size_t, c.pinn.control_inner_steps)},
        {"control_lr", AQ_D(c.pinn.control_lr)},
        {"control_grid", AQ_U(std::size_t, c.pinn.control_grid)},
        {"stop_eps", AQ_D(c.pinn.stop_eps)},
        {"lr0", AQ_D(c.pinn.lr0)},
        {"hidden", AQ_L(c.pinn.hidden)},
        {"pool", AQ_U(std::size_t, c.pinn.pool)},
        {"max_rounds", AQ_U(std::size_t, c.pinn.max_rounds)},
        {"literal_hinge", AQ_B(c.pinn.literal_hinge)},
        {"one_sided_boundary", AQ_B(c.pinn.one_sided_boundary)},
        {"seed", AQ_U(std::uint64_t, c.pinn.seed)},
    };
    r["deepos"] = {
        {"stride", AQ_U(std::size_t, c.deepos.stride)},
        {"hidden", AQ_L(c.deepos.hidden)},
        {"steps_per_decision", AQ_U(std::size_t, c.deepos.steps_per_decision)},
        {"lr", AQ_D(c.deepos.lr)},
        {"batch", AQ_U(std::size_t, c.deepos.batch)},
        {"seed", AQ_U(std::uint64_t, c.deepos.seed)},
        {"warm_start", AQ_B(c.deepos.warm_start)},
        {"in_sample", AQ_B(c.deepos.in_sample)},
        {"validation_paths", AQ_U(std::size_t, c.deepos.validation_paths)},
        {"validation_seed", AQ_U(std::uint64_t, c.deepos.validation_seed)},
    };
    r["run"] = {
        {"preset",
         {[](const ExperimentConfig& c) { return c.preset; },
          [](ExperimentConfig&, const std::string& s) {
            if (s != "paper" && s != "desk") throw std::invalid_argument("config: unknown preset '" + s + "'");
          }}},
        {"seed", AQ_U(std::uint64_t, c.run.seed)},
        {"n_paths", AQ_U(std::size_t, c.run.n_paths)},
        {"n_steps", AQ_U(std::size_t, c.run.n_steps)},
        {"threads", AQ_U(std::size_t, c.run.threads)},
        {"out_dir",
         {[](const ExperimentConfig& c) { return c.run.out_dir; },
          [](ExperimentConfig& c, const std::string& s) { c.run.out_dir = s; }}},
        {"trajectory_paths", AQ_L(c.run.trajectory_paths)},
    };
    return r;
  }();
  return reg;
}

#undef AQ_D
#undef AQ_U
#undef AQ_B
#undef AQ_L

const std::vector<std::string> kFeedingKeys{"kind", "f0", "eta", "lambda", "L", "k", "tI", "a", "tp", "b"};

void apply_feeding(ExperimentConfig& c, const pt::ptree& sec) {
  for (const auto& [key, node] : sec) {
    if (std::find(kFeedingKeys.begin(), kFeedingKeys.end(), key) == kFeedingKeys.end()) {
      throw std::invalid_argument("config: unknown key [feeding] " + key);
    }
    if (!node.empty()) throw std::invalid_argument("config: nested value for [feeding] " + key);
  }
  auto num = [&](const char* key, double fallback) {
    const auto v = sec.get_optional<std::string>(key);
    return v ? to_double(std::string("feeding.") + key, *v) : fallback;
  };
  const std::string kind = sec.get<std::string>("kind", c.feeding.kind());
  double f0 = 0.1;
  std::visit([&](const auto& v) { f0 = v.f0; }, c.feeding.variant());
  f0 = num("f0", f0);
  FeedingStrategy base = kind == c.feeding.kind() && !sec.get_optional<std::string>("f0")
                             ? c.feeding
                             : default_feeding(kind, f0, c.model.T);
  FeedingStrategy::Variant v = base.variant();
  if (auto* s = std::get_if<LinearFeeding>(&v)) {
    s->f0 = f0;
    s->eta = num("eta", s->eta);
  } else if (auto* s = std::get_if<ExponentialFeeding>(&v)) {
    s->f0 = f0;
    s->lambda = num("lambda", s->lambda);
  } else if (auto* s = std::get_if<LogisticFeeding>(&v)) {
    s->f0 = f0;
    s->L = num("L", s->L);
    s->k = num("k", s->k);
    s->tI = num("tI", s->tI);
  } else if (auto* s = std::get_if<SinusoidalFeeding>(&v)) {
    s->f0 = f0;
    s->a = num("a", s->a);
    s->tp = num("tp", s->tp);
    s->b = num("b", s->b);
  }
  c.feeding = FeedingStrategy(v);
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  const auto& reg = registry();
  for (const auto& [name, sec] : tree) {
    if (name != "feeding" && !reg.count(name)) throw std::invalid_argument("config: unknown section [" + name + "]");
    if (sec.empty() && !sec.data().empty()) throw std::invalid_argument("config: key '" + name + "' outside a section");
  }
  // Model first: feeding defaults depend on T and f0.
  for (const char* name : {"model", "grid", "pinn", "deepos", "run"}) {
    const auto sec = tree.get_child_optional(name);
    const Section& fields = reg.at(name);
    for (const auto& [key, node] : sec ? *sec : pt::ptree()) {
      auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == key; });
      if (it == fields.end()) throw std::invalid_argument(std::string("config: unknown key [") + name + "] " + key);
      try {
        it->second.set(cfg, node.data());
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("config: [") + name + "] " + key + ": " + e.what());
      }
    }
    if (std::string(name) == "model") {
      if (const auto fsec = tree.get_child_optional("feeding")) apply_feeding(cfg, *fsec);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file " + path);
  return parse_config(f, std::move(base));
}

std::string config_file_preset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file " + path);
  pt::ptree tree;
  try {
    pt::read_ini(f, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return tree.get<std::string>("run.preset", "");
}

void write_config(const ExperimentConfig& cfg, std::ostream& out) {
  const auto& reg = registry();
  for (const char* name : {"model"}) {
    out << "[" << name << "]\n";
    for (const auto& [key, field] : reg.at(name)) out << key << " = " << field.get(cfg) << "\n";
  }
  out << "\n[feeding]\nkind = " << cfg.feeding.kind() << "\n";
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        out << "f0 = " << fmt(v.f0) << "\n";
        if constexpr (std::is_same_v<T, LinearFeeding>) out << "eta = " << fmt(v.eta) << "\n";
        if constexpr (std::is_same_v<T, ExponentialFeeding>) out << "lambda = " << fmt(v.lambda) << "\n";
        if constexpr (std::is_same_v<T, LogisticFeeding>) {
          out << "L = " << fmt(v.L) << "\nk = " << fmt(v.k) << "\ntI = " << fmt(v.tI) << "\n";
        }
        if constexpr (std::is_same_v<T, SinusoidalFeeding>) {
          out << "a = " << fmt(v.a) << "\ntp = " << fmt(v.tp) << "\nb = " << fmt(v.b) << "\n";
        }
      },
      cfg.feeding.variant());
  for (const char* name : {"grid", "pinn", "deepos", "run"}) {
    out << "\n[" << name << "]\n";
    for (const auto& [key, field] : reg.at(name)) out << key << " = " << field.get(cfg) << "\n";
  }
}

}  // namespace aquaopt
