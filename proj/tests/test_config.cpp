#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aquaopt/config.hpp"

using namespace aquaopt;

namespace {

ExperimentConfig parse(const std::string& text, const std::string& preset = "desk") {
  std::istringstream in(text);
  return parse_config(in, ExperimentConfig::preset_config(preset));
}

std::string written(const ExperimentConfig& c) {
  std::ostringstream out;
  write_config(c, out);
  return out.str();
}

}  // namespace

TEST_CASE("presets") {
  const auto paper = ExperimentConfig::preset_config("paper");
  const auto desk = ExperimentConfig::preset_config("desk");
  CHECK(paper.preset == "paper");
  CHECK(paper.grid.w.n == 64);
  CHECK(paper.grid.pF.n == 32);
  CHECK(paper.grid.n_time == 2048);
  CHECK(paper.pinn.epochs == 10000);
  CHECK(paper.pinn.batch == 4096);
  CHECK(paper.deepos.stride == 16);
  CHECK(desk.grid.w.n == 32);
  CHECK(desk.grid.pF.n == 16);
  CHECK(desk.pinn.epochs == 2000);
  CHECK(desk.deepos.stride == 32);
  for (const auto& c : {paper, desk}) {
    CHECK(c.model.r == 0.01);
    CHECK(c.feeding.kind() == "linear");
    CHECK(c.feeding.rate(c.model.T) == doctest::Approx(1.0));
    CHECK(c.run.n_paths == 8192);
    CHECK(c.run.n_steps == 2048);
    CHECK_NOTHROW(c.validate());
  }
  CHECK_THROWS_AS(ExperimentConfig::preset_config("laptop"), std::invalid_argument);
}

TEST_CASE("written configurations parse back to themselves") {
  auto c = ExperimentConfig::preset_config("desk");
  c.model.sigmaF = 0.1 / 3.0;
  c.model.growth = GrowthLaw::Affine;
  c.model.cost_convention = CostConvention::Discounted;
  c.grid.pB.n = 9;
  c.pinn.hidden = {7, 5};
  c.pinn.literal_hinge = true;
  c.pinn.one_sided_boundary = true;
  c.deepos.seed = 123456789012345ULL;
  c.run.trajectory_paths = {0, 3, 17};
  c.run.out_dir = "some/where";
  c.feeding = default_feeding("logistic", 0.2, c.model.T);
  const std::string text = written(c);
  const auto back = parse(text);
  CHECK(written(back) == text);
  CHECK(back.model.sigmaF == c.model.sigmaF);
  CHECK(back.model.growth == GrowthLaw::Affine);
  CHECK(back.pinn.hidden == std::vector<std::size_t>{7, 5});
  CHECK(back.pinn.one_sided_boundary);
  CHECK(back.deepos.seed == 123456789012345ULL);
  CHECK(back.feeding.kind() == "logistic");
  CHECK(back.feeding.rate(1.234) == c.feeding.rate(1.234));
  for (const char* section : {"[model]", "[feeding]", "[grid]", "[pinn]", "[deepos]", "[run]"}) {
    CHECK(text.find(section) != std::string::npos);
  }
}

TEST_CASE("partial files override the preset") {
  const auto c = parse("[model]\nsigmaF = 0.2\n[run]\nseed = 9\nn_paths = 100\ntrajectory_paths = 1, 2\n");
  CHECK(c.model.sigmaF == 0.2);
  CHECK(c.model.sigmaB == ExperimentConfig::preset_config("desk").model.sigmaB);
  CHECK(c.run.seed == 9);
  CHECK(c.run.n_paths == 100);
  CHECK(c.run.trajectory_paths == std::vector<std::size_t>{1, 2});
  CHECK(c.grid.w.n == 32);
  CHECK(parse("[grid]\nw_n = 40\n", "paper").grid.w.n == 40);
  CHECK(parse("").grid.w.n == 32);
}

TEST_CASE("feeding section") {
  SUBCASE("kind switch uses the normalised defaults") {
    const auto c = parse("[feeding]\nkind = exponential\n");
    CHECK(c.feeding.kind() == "exponential");
    CHECK(c.feeding.rate(c.model.T) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("single coefficients override") {
    const auto c = parse("[feeding]\neta = 0.2\n");
    CHECK(c.feeding.rate(1.0) == doctest::Approx(0.3));
  }
  SUBCASE("defaults follow the model horizon") {
    const auto c = parse("[model]\nT = 2\n[feeding]\nkind = linear\nf0 = 0.2\n");
    CHECK(c.feeding.rate(2.0) == doctest::Approx(1.0));
  }
  SUBCASE("a feeding section without a model section applies") {
    const auto c = parse("[feeding]\nkind = sinusoidal\n");
    CHECK(c.feeding.kind() == "sinusoidal");
  }
  CHECK_THROWS_AS(parse("[feeding]\nkind = quadratic\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[feeding]\nlambda = 1\nbogus = 2\n"), std::invalid_argument);
}

TEST_CASE("malformed documents are rejected") {
  CHECK_THROWS_AS(parse("[model]\nsigma = 0.1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[solver]\nx = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[model]\nr = fast\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[model]\nr = 0.03x\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[grid]\nw_n = -3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[grid]\nallow_unstable = maybe\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[model]\ngrowth_law = linear\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[run]\npreset = huge\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("loose = 1\n"), std::invalid_argument);
  // Parsed values still go through validation.
  CHECK_THROWS_AS(parse("[model]\nuBar = 0.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[run]\nn_paths = 4\ntrajectory_paths = 4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("[grid]\nw_lo = 2\nw_hi = 1\n"), std::invalid_argument);
  CHECK(parse("[grid]\nallow_unstable = true\n").allow_unstable);
}

TEST_CASE("config files and their preset") {
  const auto dir = std::filesystem::temp_directory_path() / "aquaopt_test_config";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "run.ini").string();
  {
    std::ofstream f(path);
    f << "[run]\npreset = paper\nseed = 4\n";
  }
  CHECK(config_file_preset(path) == "paper");
  const auto c = load_config_file(path, ExperimentConfig::preset_config(config_file_preset(path)));
  CHECK(c.grid.w.n == 64);
  CHECK(c.run.seed == 4);
  {
    std::ofstream f(path);
    f << "[model]\nr = 0.02\n";
  }
  CHECK(config_file_preset(path).empty());
  CHECK_THROWS_AS(load_config_file((dir / "missing.ini").string(), ExperimentConfig::preset_config("desk")),
                  std::invalid_argument);
  std::filesystem::remove_all(dir);
}
