#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fairlds/datagen.hpp"

using namespace fairlds;
using namespace fairlds::datagen;

TEST_CASE("beta = 1 keeps every observation") {
  GeneratorConfig cfg;
  cfg.horizon = 12;
  cfg.trajectories = {{"a", 2}, {"d", 3}};
  cfg.beta_d = 1.0;
  cfg.seed = 3;
  lds::Panel p = sample_panel(cfg);
  CHECK(p.observation_count() == 12 * 5);
  for (const auto& [i, obs] : p.data.at("d")) {
    (void)i;
    CHECK(obs.size() == 12);
  }
}

TEST_CASE("same seed reproduces the panel exactly") {
  GeneratorConfig cfg;
  cfg.horizon = 20;
  cfg.trajectories = {{"a", 2}, {"d", 2}};
  cfg.beta_d = 0.6;
  cfg.seed = 99;
  lds::Panel p = sample_panel(cfg);
  lds::Panel q = sample_panel(cfg);
  CHECK(p.data == q.data);
  cfg.seed = 100;
  CHECK(sample_panel(cfg).data != p.data);
}

TEST_CASE("simulated states replay the recursion exactly") {
  GeneratorConfig cfg;
  cfg.horizon = 15;
  cfg.trajectories = {{"a", 1}, {"d", 2}};
  cfg.seed = 5;
  Simulation sim = simulate(cfg);
  REQUIRE(sim.trajectories.size() == 3);
  for (const auto& tr : sim.trajectories) {
    REQUIRE(tr.states.size() == 16);
    double m0 = cfg.m0.at(tr.subgroup);
    CHECK(tr.states[0][0] == m0);
    CHECK(tr.states[0][1] == m0);
    for (int t = 1; t <= cfg.horizon; ++t) {
      const auto& prev = tr.states[t - 1];
      const auto& cur = tr.states[t];
      CHECK(cur[0] == cfg.G[0][0] * prev[0] + cfg.G[0][1] * prev[1] + tr.w_noise[t - 1][0]);
      CHECK(cur[1] == cfg.G[1][0] * prev[0] + cfg.G[1][1] * prev[1] + tr.w_noise[t - 1][1]);
      CHECK(tr.observations[t - 1] ==
            cfg.F[0] * cur[0] + cfg.F[1] * cur[1] + tr.v_noise[t - 1]);
    }
  }
}

TEST_CASE("covariances are drawn once per subgroup within the stated ranges") {
  GeneratorConfig cfg;
  cfg.seed = 17;
  Simulation sim = simulate(cfg);
  for (const auto& [s, v] : sim.v_var) {
    (void)s;
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
  for (const auto& [s, w] : sim.w_var) {
    (void)s;
    CHECK(w[0] >= 0.0);
    CHECK(w[0] < 0.1);
    CHECK(w[1] >= 0.0);
    CHECK(w[1] < 0.1);
  }
}

TEST_CASE("retention with the per-period floor stays in the conditional binomial band") {
  // 2 disadvantaged trajectories, beta 0.5, 100 periods. Kept-per-period is
  // Binomial(2, 1/2) conditioned on >= 1: mean 4/3, variance 2/9.
  GeneratorConfig cfg;
  cfg.horizon = 100;
  cfg.trajectories = {{"a", 2}, {"d", 2}};
  cfg.beta_d = 0.5;
  double mean = 100.0 * (4.0 / 3.0);
  double sd = std::sqrt(100.0 * (2.0 / 9.0));
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    cfg.seed = seed;
    lds::Panel p = sample_panel(cfg);
    int kept = 0;
    for (const auto& [i, obs] : p.data.at("d")) {
      (void)i;
      kept += static_cast<int>(obs.size());
    }
    CHECK(kept >= mean - 4.0 * sd);
    CHECK(kept <= mean + 4.0 * sd);
    // the floor guarantees each period keeps at least one observation
    std::set<int> periods;
    for (const auto& [i, obs] : p.data.at("d"))
      for (const auto& [t, y] : obs) {
        (void)y;
        periods.insert(t);
      }
    CHECK(periods.size() == 100);
    // the advantaged subgroup never loses observations
    int kept_a = 0;
    for (const auto& [i, obs] : p.data.at("a")) {
      (void)i;
      kept_a += static_cast<int>(obs.size());
    }
    CHECK(kept_a == 200);
  }
}

TEST_CASE("retention rate approaches beta when the floor rarely binds") {
  // 20 trajectories: the floor fires with probability 0.3^20 per period
  GeneratorConfig cfg;
  cfg.horizon = 50;
  cfg.trajectories = {{"a", 1}, {"d", 20}};
  cfg.m0["d"] = 7.0;
  cfg.beta_d = 0.7;
  cfg.seed = 11;
  lds::Panel p = sample_panel(cfg);
  int kept = 0;
  for (const auto& [i, obs] : p.data.at("d")) {
    (void)i;
    kept += static_cast<int>(obs.size());
  }
  double n = 1000.0, mean = n * 0.7, sd = std::sqrt(n * 0.7 * 0.3);
  CHECK(kept >= mean - 4.0 * sd);
  CHECK(kept <= mean + 4.0 * sd);
}

TEST_CASE("beta = 0 keeps exactly the floor") {
  GeneratorConfig cfg;
  cfg.horizon = 10;
  cfg.trajectories = {{"a", 1}, {"d", 3}};
  cfg.beta_d = 0.0;
  cfg.seed = 2;
  lds::Panel p = sample_panel(cfg);
  int kept = 0;
  for (const auto& [i, obs] : p.data.at("d")) {
    (void)i;
    kept += static_cast<int>(obs.size());
  }
  // 10 periods via the first trajectory, plus the guaranteed first
  // observation of each otherwise-empty trajectory
  CHECK(kept == 12);
}

TEST_CASE("generator config validation") {
  GeneratorConfig cfg;
  cfg.beta_d = 1.2;
  CHECK_THROWS(cfg.validate());
  cfg.beta_d = 0.5;
  cfg.horizon = 0;
  CHECK_THROWS(cfg.validate());
  cfg.horizon = 5;
  cfg.trajectories = {{"a", 0}};
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("generator config json round trip") {
  GeneratorConfig cfg;
  cfg.beta_d = 0.55;
  cfg.seed = 42;
  cfg.horizon = 7;
  GeneratorConfig back = GeneratorConfig::from_json(cfg.to_json());
  CHECK(back.beta_d == cfg.beta_d);
  CHECK(back.seed == cfg.seed);
  CHECK(back.horizon == cfg.horizon);
  CHECK(back.G == cfg.G);
  CHECK(back.m0 == cfg.m0);
}

TEST_CASE("annuity premium") {
  SUBCASE("full survival without discounting pays ten") {
    std::vector<double> p(11, 100.0);
    CHECK(annuity_premium(p, 0.0) == doctest::Approx(10.0));
  }
  SUBCASE("immediate lapse pays nothing") {
    std::vector<double> p(11, 0.0);
    p[0] = 100.0;
    CHECK(annuity_premium(p, 0.1) == doctest::Approx(0.0));
  }
  SUBCASE("hand-computed discounted case") {
    std::vector<double> p = {100, 90, 80, 0, 0, 0, 0, 0, 0, 0, 0};
    CHECK(annuity_premium(p, 0.1) ==
          doctest::Approx((90.0 / 1.1 + 80.0 / 1.21) / 100.0).epsilon(1e-12));
    CHECK(annuity_premium(p, 0.1) == doctest::Approx(1.479338843).epsilon(1e-6));
  }
  SUBCASE("contract violations are rejected") {
    std::vector<double> p(11, 100.0);
    p[0] = 0.0;
    CHECK_THROWS(annuity_premium(p, 0.0));
    CHECK_THROWS(annuity_premium(std::vector<double>(5, 1.0), 0.0));
    std::vector<double> rising(11, 100.0);
    rising[5] = 200.0;
    CHECK_THROWS(annuity_premium(rising, 0.0));
  }
}
