#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chkpt/sim.hpp"
#include "chkpt/solvers.hpp"
#include "test_util.hpp"

using namespace chkpt;

TEST_CASE("without failures the sample mean is exact and the spread is zero") {
  ModelParams p{1.0, 1.0, 0.01, 0.1, 0.0};
  Plan plan{{Chunk{0.4, 2.0, 1.0}, Chunk{0.6, 1.5, 2.0}}};
  SimConfig cfg;
  cfg.trials = 5000;
  const ValidationReport rep = validate_expectations(p, plan, cfg);
  const EvalResult ev = evaluate(p, plan);
  CHECK(rep.stats.mean_time == ev.expected_time);  // bitwise: same accumulation
  CHECK(rep.stats.mean_energy == ev.expected_energy);
  CHECK(rep.stats.sem_time == 0.0);
  CHECK(rep.stats.sem_energy == 0.0);
  CHECK(rep.z_time == 0.0);
  CHECK(rep.z_energy == 0.0);
  CHECK(rep.pass);
}

TEST_CASE("single-retry sampling agrees with the expectations within four sigma") {
  testutil::Rng rng(31);
  for (int it = 0; it < 6; ++it) {
    ModelParams p{rng.log_uniform(0.5, 5.0), 1.0, rng.log_uniform(1e-4, 1e-2),
                  rng.log_uniform(1e-3, 10.0), rng.log_uniform(0.01, 0.8)};
    const SolveOutcome r = solve_variant(
        p, VariantSpec{ChunkMode::Multi, SpeedMode::Multi, DeadlineMode::Hard});
    REQUIRE(r.status == SolveStatus::Optimal);
    SimConfig cfg;
    cfg.trials = 200000;
    cfg.seed = 1000 + it;
    const ValidationReport rep = validate_expectations(p, *r.plan, cfg);
    CHECK(!rep.out_of_model);
    CHECK(std::abs(rep.z_time) <= 4.0);
    CHECK(std::abs(rep.z_energy) <= 4.0);
    CHECK(rep.pass);
  }
}

TEST_CASE("exponential sampling agrees with the exact-model expectations") {
  SUBCASE("single chunk") {
    ModelParams p{1.0, 10.0, 0.02, 0.5, 0.6};
    Plan plan{{Chunk{1.0, 1.2, 0.9}}};
    SimConfig cfg;
    cfg.trials = 300000;
    cfg.seed = 9;
    cfg.model = FailureModel::Exponential;
    const ValidationReport rep = validate_expectations(p, plan, cfg);
    CHECK(rep.analytic_time ==
          doctest::Approx(exp_expected_time(p, 1.2, 0.9)).epsilon(1e-12));
    CHECK(std::abs(rep.z_time) <= 4.0);
    CHECK(std::abs(rep.z_energy) <= 4.0);
    CHECK(rep.pass);
  }
  SUBCASE("several unequal chunks") {
    ModelParams p{2.0, 10.0, 0.02, 0.5, 0.7};
    Plan plan{{Chunk{0.5, 1.0, 0.8}, Chunk{1.0, 1.5, 1.1}, Chunk{0.5, 0.7, 0.7}}};
    SimConfig cfg;
    cfg.trials = 300000;
    cfg.seed = 10;
    cfg.model = FailureModel::Exponential;
    const ValidationReport rep = validate_expectations(p, plan, cfg);
    CHECK(std::abs(rep.z_time) <= 4.0);
    CHECK(std::abs(rep.z_energy) <= 4.0);
    CHECK(rep.pass);
  }
}

TEST_CASE("results are bit-identical across thread counts and repeat runs") {
  ModelParams p{1.0, 1.0, 0.01, 0.1, 0.4};
  const SolveOutcome r = solve_variant(
      p, VariantSpec{ChunkMode::Multi, SpeedMode::Single, DeadlineMode::Expected});
  REQUIRE(r.status == SolveStatus::Optimal);
  SimConfig cfg;
  cfg.trials = 40000;
  cfg.seed = 77;
  cfg.threads = 1;
  const SimStats a = simulate(p, *r.plan, cfg);
  cfg.threads = 3;
  const SimStats b = simulate(p, *r.plan, cfg);
  cfg.threads = 0;
  const SimStats c = simulate(p, *r.plan, cfg);
  const SimStats d = simulate(p, *r.plan, cfg);  // repeat run
  CHECK(a.mean_time == b.mean_time);
  CHECK(a.mean_energy == b.mean_energy);
  CHECK(a.sem_time == b.sem_time);
  CHECK(a.max_time == b.max_time);
  CHECK(a.mean_time == c.mean_time);
  CHECK(c.mean_time == d.mean_time);
  CHECK(c.sem_energy == d.sem_energy);

  cfg.seed = 78;
  const SimStats e = simulate(p, *r.plan, cfg);
  CHECK(e.mean_time != a.mean_time);  // a different seed moves the sample
}

TEST_CASE("sampled times respect the single-retry worst case") {
  ModelParams p{1.0, 1.0, 0.005, 0.05, 0.9};
  const SolveOutcome r = solve_variant(
      p, VariantSpec{ChunkMode::Multi, SpeedMode::Multi, DeadlineMode::Hard});
  REQUIRE(r.status == SolveStatus::Optimal);
  SimConfig cfg;
  cfg.trials = 100000;
  cfg.seed = 5;
  const SimStats st = simulate(p, *r.plan, cfg);
  CHECK(st.max_time <= r.eval.worst_time * (1.0 + 1e-12));
  CHECK(st.deadline_miss_rate_hard == 0.0);  // hard deadline covers every trial
  CHECK(st.deadline_miss_rate_expected == st.deadline_miss_rate_hard);
}

TEST_CASE("a plan past its deadline misses in every trial") {
  ModelParams p{1.0, 0.1, 0.0, 0.0, 0.0};
  Plan plan{{Chunk{1.0, 1.0, 1.0}}};  // takes time 1 > D = 0.1, never fails
  SimConfig cfg;
  cfg.trials = 1000;
  const SimStats st = simulate(p, plan, cfg);
  CHECK(st.deadline_miss_rate_expected == 1.0);
  CHECK(st.deadline_miss_rate_hard == 1.0);
}

TEST_CASE("standard error shrinks like the square root of the trial count") {
  ModelParams p{1.0, 1.0, 0.01, 0.1, 0.5};
  const SolveOutcome r = solve_variant(
      p, VariantSpec{ChunkMode::Single, SpeedMode::Single, DeadlineMode::Expected});
  REQUIRE(r.status == SolveStatus::Optimal);
  SimConfig small;
  small.trials = 10000;
  small.seed = 3;
  SimConfig large;
  large.trials = 1000000;
  large.seed = 3;
  const SimStats a = simulate(p, *r.plan, small);
  const SimStats b = simulate(p, *r.plan, large);
  const double ratio = a.sem_time / b.sem_time;
  CHECK(ratio > 8.0);
  CHECK(ratio < 12.0);
}

TEST_CASE("failure probabilities above one are clamped and flagged") {
  ModelParams p{1.0, 100.0, 0.5, 0.0, 3.0};
  Plan plan{{Chunk{1.0, 0.5, 0.5}}};  // lambda * t = 7.5
  SimConfig cfg;
  cfg.trials = 2000;
  const ValidationReport rep = validate_expectations(p, plan, cfg);
  CHECK(rep.stats.clamped);
  CHECK(rep.out_of_model);
  CHECK(rep.pass);  // out-of-model runs skip the comparison instead of failing
  // Every trial fails its one retry: time = t + r = 5, energy = 2 * 0.25.
  CHECK(rep.stats.mean_time == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(rep.stats.mean_energy == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("a tight retry cap truncates the exponential model and is reported") {
  ModelParams p{1.0, 10.0, 0.02, 0.1, 2.0};
  Plan plan{{Chunk{1.0, 1.0, 1.0}}};
  SimConfig cfg;
  cfg.trials = 100000;
  cfg.seed = 21;
  cfg.model = FailureModel::Exponential;
  cfg.retry_cap = 1;
  const ValidationReport rep = validate_expectations(p, plan, cfg);
  CHECK(rep.stats.capped_trials > 0);
  CHECK(std::abs(rep.z_time) > 4.0);  // truncation bias is visible at this size
  CHECK(!rep.pass);

  cfg.retry_cap = 10000;
  const ValidationReport full = validate_expectations(p, plan, cfg);
  CHECK(full.stats.capped_trials == 0);
  CHECK(full.pass);
}
