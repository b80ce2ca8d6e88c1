#pragma once

#include <cstdint>

#include "chkpt/model.hpp"

// Monte Carlo validation of the analytic expectations.
//
// Reproducibility contract: trials are split over 64 fixed logical shards;
// shard k runs an mt19937_64 engine seeded with splitmix64(seed ^ (k+1)) and
// uniforms are drawn as (engine() >> 11) * 2^-53. Results are bit-identical
// for a given (params, plan, config) regardless of thread count or platform.

namespace chkpt {

enum class FailureModel { SingleRetry, Exponential };

struct SimConfig {
  long trials = 1000000;
  std::uint64_t seed = 0;
  FailureModel model = FailureModel::SingleRetry;
  long retry_cap = 10000;  // Exponential: max recovery attempts per chunk
  int threads = 1;         // 0 = all hardware threads; affects speed only
};

struct SimStats {
  long trials = 0;
  double mean_time = 0.0;
  double mean_energy = 0.0;
  double sem_time = 0.0;
  double sem_energy = 0.0;
  double max_time = 0.0;
  double deadline_miss_rate_expected = 0.0;  // fraction of trials with time > D
  double deadline_miss_rate_hard = 0.0;      // same count, kept per output schema
  long capped_trials = 0;  // Exponential trials where some chunk hit retry_cap
  bool clamped = false;    // SingleRetry: some failure probability clamped into [0,1]
};

SimStats simulate(const ModelParams& p, const Plan& plan, const SimConfig& cfg);

struct ValidationReport {
  SimStats stats;
  double analytic_time = 0.0;
  double analytic_energy = 0.0;
  double z_time = 0.0;
  double z_energy = 0.0;
  bool out_of_model = false;  // SingleRetry with max_fail_prob > 1: comparison skipped
  bool pass = false;          // |z| <= 4 for both time and energy
};

// Compares empirical means against the matching analytic expectations:
// the linearized single-retry formulas, or the exponential-model formulas
// summed over chunks.
ValidationReport validate_expectations(const ModelParams& p, const Plan& plan,
                                       const SimConfig& cfg);

}  // namespace chkpt
