#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "aquaopt/model.hpp"
#include "aquaopt/parallel.hpp"

using namespace aquaopt;

namespace {

FeedingStrategy linear_feeding() { return FeedingStrategy::linear(0.1, 0.3); }

}  // namespace

TEST_CASE("feeding rates of the four strategies") {
  const double T = 3.0;
  CHECK(linear_feeding().rate(0.0) == doctest::Approx(0.1));
  CHECK(linear_feeding().rate(3.0) == doctest::Approx(1.0));
  CHECK(FeedingStrategy::normalized_exponential(0.1, T).rate(3.0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto sine = FeedingStrategy::normalized_sinusoidal(0.1, T);
  CHECK(sine.rate(0.0) == doctest::Approx(0.1));
  const auto& sv = std::get<SinusoidalFeeding>(sine.variant());
  CHECK(sv.b == doctest::Approx((1.0 - 0.1 - 0.1) / 3.0));
  CHECK(sv.a + sv.b * T + sv.f0 == doctest::Approx(1.0));
  const auto logistic = FeedingStrategy::default_logistic(0.1, T);
  CHECK(logistic.rate(1.5) == doctest::Approx(0.1 + 0.9 / 2.0));
  CHECK(logistic.kind() == "logistic");

  for (const auto& s : {linear_feeding(), FeedingStrategy::normalized_exponential(0.1, T), logistic, sine}) {
    for (int i = 0; i <= 10000; ++i) {
      const double f = s.rate(T * i / 10000.0);
      REQUIRE(f >= 0.0);
      REQUIRE(f <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("weight drift") {
  ModelParams p;
  CHECK(weight_drift(0, p.wInf, 0.4, 0.1, p) == doctest::Approx(0.0));
  // Richards growth carries the leading w factor: 0.01 * 4.93065.
  CHECK(weight_drift(0, 0.01, 0.4, 0.4, p) == doctest::Approx(0.01 * 4.93065).epsilon(1e-5));
  CHECK(weight_drift(0, 1.3, 0.9, 0.9 - std::sqrt(0.5), p) == doctest::Approx(0.0).epsilon(1e-12));
  ModelParams affine = p;
  affine.growth = GrowthLaw::Affine;
  CHECK(weight_drift(0, 0.01, 0.4, 0.4, affine) == doctest::Approx(4.93065).epsilon(1e-5));

  // Vertex of the quadratic penalty at u = f.
  const double f = 0.37;
  double best = -1e300, arg = -1;
  for (int j = 0; j <= 1000; ++j) {
    const double u = j / 1000.0;
    const double v = weight_drift(0, 0.7, f, u, p);
    if (v > best) {
      best = v;
      arg = u;
    }
  }
  CHECK(std::abs(arg - f) <= 1e-3);
}

TEST_CASE("population drift") {
  ModelParams p;
  CHECK(population_drift(0, 1.0, 0.3, 0.3, p) == doctest::Approx(-0.1));
  CHECK(population_drift(0, 1.0, 1.0, 0.0, p) == doctest::Approx(-3.1));
  CHECK(population_drift(0, 0.5, 0.3, 0.3, p) == doctest::Approx(-0.05));
  for (double u : {0.0, 0.2, 0.5, 1.0}) CHECK(population_drift(0, 0.8, 0.5, u, p) <= -p.mu * 0.8 + 1e-15);
}

TEST_CASE("deterministic integration against closed forms") {
  ModelParams p;
  const auto s = linear_feeding();
  const PointPolicy follow = [&](double t, double, double, double, double) { return s.rate(t); };
  SUBCASE("h decays at the intrinsic rate under u = f") {
    const auto tr = integrate_deterministic(p, s, follow, 1e-4, 2.0);
    CHECK(tr.h.back() == doctest::Approx(std::exp(-p.mu * 2.0)).epsilon(1e-4));
  }
  SUBCASE("nu = 1 Richards growth is logistic") {
    ModelParams q = p;
    q.nu = 1.0;
    const auto tr = integrate_deterministic(q, s, follow, 1e-4, 1.0);
    const double exact = q.wInf / (1.0 + (q.wInf / q.w0 - 1.0) * std::exp(-q.gamma * 1.0));
    CHECK(tr.w.back() == doctest::Approx(exact).epsilon(2e-3));
  }
  SUBCASE("nu = 1 affine growth has the linear closed form") {
    ModelParams q = p;
    q.nu = 1.0;
    q.growth = GrowthLaw::Affine;
    const auto tr = integrate_deterministic(q, s, follow, 1e-4, 1.0);
    const double exact = q.wInf + (q.w0 - q.wInf) * std::exp(-q.gamma * 1.0 / q.wInf);
    CHECK(std::abs(tr.w.back() - exact) <= 1e-4);
  }
  SUBCASE("constant penalty with u = 0") {
    const auto c = FeedingStrategy::linear(0.4, 0.0);
    const PointPolicy zero = [](double, double, double, double, double) { return 0.0; };
    const auto tr = integrate_deterministic(p, c, zero, 1e-4, 1.5);
    CHECK(tr.h.back() == doctest::Approx(std::exp(-(p.mu + p.muF * 0.16) * 1.5)).epsilon(1e-4));
  }
  SUBCASE("a policy reading prices without a price path fails") {
    const PointPolicy reads = [](double, double, double, double pF, double) { return pF; };
    CHECK_THROWS_AS(integrate_deterministic(p, s, reads, 1e-3, 1.0), std::domain_error);
  }
  SUBCASE("horizon beyond T is rejected") {
    CHECK_THROWS_AS(integrate_deterministic(p, s, follow, 1e-3, 3.5), std::invalid_argument);
  }
}

TEST_CASE("euler step clamps overshoots") {
  ModelParams p;
  double w = 2.999, h = 1.0;
  euler_step(p, 0.5, 0.5, 10.0, w, h);
  CHECK(w <= p.wInf);
  CHECK(h > 0.0);
  CHECK(h <= 1.0);
}

TEST_CASE("biomass peak time") {
  ModelParams p;
  const auto s = linear_feeding();
  CHECK(biomass_peak_time(s, p, p.T / 2048) == doctest::Approx(2.176).epsilon(0.01 / 2.176));
  ModelParams immortal = p;
  immortal.mu = 0.0;
  CHECK(biomass_peak_time(s, immortal, p.T / 2048) == doctest::Approx(p.T));
  ModelParams starving = p;
  starving.gamma = 0.0;
  CHECK(biomass_peak_time(s, starving, p.T / 2048) == 0.0);
}

TEST_CASE("parameter validation") {
  ModelParams p;
  CHECK_NOTHROW(p.validate(linear_feeding()));
  ModelParams q = p;
  q.uBar = 0.5;
  CHECK_THROWS_AS(q.validate(linear_feeding()), std::invalid_argument);
  q = p;
  q.w0 = 4.0;
  CHECK_THROWS_AS(q.validate(linear_feeding()), std::invalid_argument);
  q = p;
  q.h0 = 2.5;
  CHECK(q.normalized().h0 == 1.0);
}

TEST_CASE("price paths") {
  ModelParams p;
  SUBCASE("zero volatility grows at the riskless rate") {
    ModelParams q = p;
    q.sigmaF = q.sigmaB = 0.0;
    const auto b = simulate_price_paths(q, 4, 64, 1);
    for (std::size_t k = 0; k <= 64; ++k) {
      CHECK(b.feed_price(k, 2) == doctest::Approx(q.pF0 * std::exp(q.r * b.time(k))).epsilon(1e-13));
      CHECK(b.biomass_price(k, 3) == doctest::Approx(q.pB0 * std::exp(q.r * b.time(k))).epsilon(1e-13));
    }
  }
  SUBCASE("same seed gives identical batches, independent of thread count") {
    const auto a = simulate_price_paths(p, 300, 32, 42);
    set_thread_count(3);
    const auto b = simulate_price_paths(p, 300, 32, 42);
    set_thread_count(1);
    CHECK(a.pF == b.pF);
    CHECK(a.pB == b.pB);
    const auto c = simulate_price_paths(p, 300, 32, 43);
    CHECK(a.pF != c.pF);
  }
  SUBCASE("path i does not depend on the batch size") {
    const auto a = simulate_price_paths(p, 10, 16, 7);
    const auto b = simulate_price_paths(p, 20, 16, 7);
    for (std::size_t k = 0; k <= 16; ++k) CHECK(a.feed_price(k, 9) == b.feed_price(k, 9));
  }
  SUBCASE("discounted prices are martingales") {
    const auto b = simulate_price_paths(p, 8192, 64, 1);
    for (std::size_t k : {std::size_t{32}, std::size_t{64}}) {
      for (int which = 0; which < 2; ++which) {
        double sum = 0, ss = 0;
        const double disc = std::exp(-p.r * b.time(k));
        for (std::size_t i = 0; i < b.n_paths; ++i) {
          const double v = disc * (which ? b.biomass_price(k, i) : b.feed_price(k, i));
          sum += v;
          ss += v * v;
        }
        const double n = static_cast<double>(b.n_paths);
        const double mean = sum / n;
        const double se = std::sqrt((ss / n - mean * mean) / (n - 1));
        CHECK(std::abs(mean - (which ? p.pB0 : p.pF0)) <= 3 * se);
      }
    }
  }
  SUBCASE("increments are kept on request and reproduce the prices") {
    const auto b = simulate_price_paths(p, 3, 8, 5, true);
    REQUIRE(b.zF.size() == 24);
    const double dt = b.dt;
    const double next =
        p.pF0 * std::exp((p.r - 0.5 * p.sigmaF * p.sigmaF) * dt + p.sigmaF * std::sqrt(dt) * b.zF[1]);
    CHECK(b.feed_price(1, 1) == doctest::Approx(next).epsilon(1e-14));
  }
  SUBCASE("CSV export") {
    const auto b = simulate_price_paths(p, 2, 2, 5);
    std::ostringstream out;
    write_paths_csv(b, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "path_id,step,t,pF,pB");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 6);
  }
  CHECK_THROWS_AS(simulate_price_paths(p, 0, 8, 1), std::invalid_argument);
}

TEST_CASE("seed mixing is a bijection-like hash") {
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  CHECK(mix_seed(1, 5) == mix_seed(1, 5));
}
