#pragma once

#include <string>
#include <vector>

// Failure-aware evaluation of checkpointed execution plans.
//
// A plan splits a divisible workload into chunks; each chunk runs once at
// its first-execution speed, is checkpointed, and on failure is re-executed
// once at its recovery speed. Expectations below linearize the failure
// probability of an attempt of length t as lambda*t.

namespace chkpt {

struct ModelParams {
  double W = 1.0;       // total work
  double D = 1.0;       // deadline
  double tc = 0.0;      // checkpoint time
  double ec = 0.0;      // checkpoint energy
  double lambda = 0.0;  // failure rate

  void validate() const;  // throws std::invalid_argument
};

enum class ChunkMode { Single, Multi };
enum class SpeedMode { Single, Multi };
enum class DeadlineMode { Expected, Hard };

struct VariantSpec {
  ChunkMode chunks = ChunkMode::Single;
  SpeedMode speeds = SpeedMode::Single;
  DeadlineMode deadline = DeadlineMode::Expected;
};

// Short tag like "scss_ed" or "mcms_hd".
std::string variant_name(const VariantSpec& v);

struct Chunk {
  double w = 0.0;      // work in this chunk
  double s = 0.0;      // first-execution speed
  double sigma = 0.0;  // recovery speed
};

struct Plan {
  std::vector<Chunk> chunks;
};

// Chunk sizes must be positive and sum to p.W within 1e-9 relative.
void validate_plan(const ModelParams& p, const Plan& plan);

struct EvalResult {
  double expected_time = 0.0;
  double worst_time = 0.0;
  double expected_energy = 0.0;
  double max_fail_prob = 0.0;  // max over chunks of lambda*(w/s + tc); may exceed 1
};

double expected_time(const ModelParams& p, const Plan& plan);
double worst_time(const ModelParams& p, const Plan& plan);
double expected_energy(const ModelParams& p, const Plan& plan);
EvalResult evaluate(const ModelParams& p, const Plan& plan);

// Exact expectations under exponentially distributed failures for the whole
// load run as one chunk, with repeated recovery attempts at speed sigma.
double exp_expected_time(const ModelParams& p, double s, double sigma);
double exp_expected_energy(const ModelParams& p, double s, double sigma);

struct TaylorGap {
  double time_gap = 0.0;    // exp_expected_time  - expected_time
  double energy_gap = 0.0;  // exp_expected_energy - expected_energy
};

// Gap between the exact exponential model and the linearized one at the same
// operating point. Shrinks as O(lambda^2).
TaylorGap taylor_gap(const ModelParams& p, double s, double sigma);

}  // namespace chkpt
