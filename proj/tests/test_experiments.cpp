#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aquaopt/experiments.hpp"

using namespace aquaopt;
namespace fs = std::filesystem;

namespace {

// Small enough for a unit test: coarse grid, short training, few paths.
ExperimentConfig tiny_config(const fs::path& out_dir) {
  std::istringstream in(
      "[grid]\nn_time = 256\nw_n = 8\nh_n = 8\npF_n = 6\npB_n = 6\nu_n = 8\n"
      "[pinn]\nepochs = 10\nbatch = 64\npool = 256\nmax_rounds = 2\nhidden = 8,8\ncontrol_grid = 8\n"
      "[deepos]\nstride = 64\nhidden = 8\nsteps_per_decision = 10\nbatch = 64\nvalidation_paths = 64\n"
      "[run]\nn_paths = 64\nn_steps = 256\ntrajectory_paths = 0,5\n");
  auto cfg = parse_config(in, ExperimentConfig::preset_config("desk"));
  cfg.run.out_dir = out_dir.string();
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

bool same_rows(const std::vector<ReportRow>& a, const std::vector<ReportRow>& b) {
  std::ostringstream sa, sb;
  write_report_csv(a, sa);
  write_report_csv(b, sb);
  return sa.str() == sb.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("report rows and CSV") {
  EvaluationReport r;
  r.mean = 0.18;
  r.stderr_ = 0.001;
  r.mean_stopping_time = 1.9;
  const auto plain = make_row("fd-5", r);
  CHECK_FALSE(plain.diff_vs_fd6.has_value());
  const auto diff = make_row("pinn-1", r, 0.185);
  CHECK(*diff.diff_vs_fd6 == doctest::Approx(0.005));
  CHECK(*make_row("pinn-2", r, 0.17).diff_vs_fd6 == doctest::Approx(0.01));
  std::ostringstream out;
  write_report_csv({plain, diff}, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "scenario,E_tau,J_mean,J_stderr,diff_vs_fd6");
  std::getline(in, line);
  CHECK(line == "fd-5,1.9,0.18,0.001,");
  std::getline(in, line);
  CHECK(line.rfind("pinn-1,", 0) == 0);
  CHECK(line.back() != ',');
}

TEST_CASE("hashing and atomic writes") {
  CHECK(fnv1a("") == 14695981039346656037ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("grid") != fnv1a("gric"));
  TempDir dir("aquaopt_test_atomic");
  const auto p = (dir.path / "x.txt").string();
  write_file_atomic(p, "one");
  write_file_atomic(p, "two");
  CHECK(slurp(p) == "two");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++files;
  CHECK(files == 1);
}

TEST_CASE("scenario ids and feeding variants") {
  const auto ids = Experiment::scenario_ids();
  CHECK(ids.size() == 18);
  CHECK(std::find(ids.begin(), ids.end(), "fd-6") != ids.end());
  CHECK(std::find(ids.begin(), ids.end(), "pinn-deepos-3") != ids.end());
  const auto base = ExperimentConfig::preset_config("desk");
  CHECK(appendix_config(base, "efr").feeding.kind() == "exponential");
  CHECK(appendix_config(base, "lfr").feeding.kind() == "logistic");
  CHECK(appendix_config(base, "sfr").feeding.kind() == "sinusoidal");
  CHECK(appendix_config(base, "sfr").grid.w.n == base.grid.w.n);
  CHECK_THROWS_AS(appendix_config(base, "xfr"), std::invalid_argument);
}

TEST_CASE("small experiment: determinism, caching and outputs") {
  TempDir dir("aquaopt_test_experiment");
  const auto cfg = tiny_config(dir.path / "a");
  const std::vector<std::string> ids{"bench-uf-tau1", "bench-u0-tau2", "fd-1", "fd-4", "fd-5", "fd-6", "pinn-1",
                                     "pinn-deepos-2"};
  std::vector<ReportRow> fresh, cached, reloaded;
  {
    Experiment ex(cfg, false);
    for (const auto& id : ids) fresh.push_back(ex.row(id));
    CHECK_FALSE(fs::exists(dir.path / "a" / "cache"));
    CHECK_THROWS_AS(ex.strategy("fd-7"), std::invalid_argument);
    CHECK_THROWS_AS(ex.evaluate("pinn-4"), std::invalid_argument);
    CHECK(ex.tau1() == doctest::Approx(2.176).epsilon(0.02));
    CHECK(ex.tau1_step() == static_cast<std::size_t>(std::lround(ex.tau1() / ex.paths().dt)));
  }
  {
    Experiment ex(cfg, true);
    for (const auto& id : ids) cached.push_back(ex.row(id));
  }
  CHECK(fs::exists(dir.path / "a" / "cache"));
  {
    Experiment ex(cfg, true);
    for (const auto& id : ids) reloaded.push_back(ex.row(id));
  }
  CHECK(same_rows(fresh, cached));
  CHECK(same_rows(fresh, reloaded));
  for (const auto& r : fresh) {
    CHECK(std::isfinite(r.J_mean));
    CHECK(r.E_tau >= 0.0);
    CHECK(r.E_tau <= cfg.model.T);
  }
  // Fixed harvest at tau1 under u = f on the shared batch.
  CHECK(fresh[0].E_tau == doctest::Approx(Experiment(cfg, false).tau1()).epsilon(1e-9));

  // h0 scales reported values.
  {
    auto scaled = cfg;
    scaled.model.h0 = 3.0;
    Experiment ex(scaled, true);
    CHECK(ex.params().h0 == 1.0);
    CHECK(ex.row("fd-6").J_mean == doctest::Approx(3.0 * fresh[5].J_mean).epsilon(1e-12));
  }

  Experiment ex(cfg, true);
  const auto files = emit_trajectory(ex, "fd-6", cfg.run.trajectory_paths);
  REQUIRE(files.size() == 2);
  CHECK(files[1] == "trajectory_fd-6_path5.csv");
  const std::string text = slurp(dir.path / "a" / files[0]);
  CHECK(text.rfind("t,w,h,pF,pB,u,value,stopped\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == cfg.run.n_steps + 2);
  CHECK_THROWS_AS(emit_trajectory(ex, "fd-6", {64}), std::invalid_argument);
}

TEST_CASE("manifest") {
  TempDir dir("aquaopt_test_manifest");
  auto cfg = tiny_config(dir.path);
  cfg.run.seed = 77;
  write_manifest(cfg, {"aquaopt", "reproduce", "--table", "4"}, {"table4.csv"});
  const auto j = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(j["preset"] == "desk");
  CHECK(j["seeds"]["paths"] == 77);
  CHECK(j["command"][1] == "reproduce");
  CHECK(j["outputs"][0] == "table4.csv");
  CHECK(j.contains("compiler"));
  CHECK(j.contains("isa"));
  const auto back = load_config_file((dir.path / "config.ini").string(), ExperimentConfig::preset_config("desk"));
  std::ostringstream a, b;
  write_config(cfg, a);
  write_config(back, b);
  CHECK(a.str() == b.str());
  CHECK(j["config"] == a.str());
}
