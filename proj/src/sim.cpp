#include "chkpt/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace chkpt {

namespace {

constexpr int kShards = 64;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double u01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

struct ChunkConsts {
  double t_exec, t_rec;  // attempt durations, checkpoint included
  double e_exec, e_rec;
  double p_fail;         // SingleRetry: clamped lambda*t_exec
  double p_fail_exp;     // Exponential: 1 - e^{-lambda t_exec}
  double p_refail_exp;   // Exponential: 1 - e^{-lambda t_rec}
};

// Running mean and squared deviation (Welford). Identical samples keep the
// mean bit-exact and M2 at zero, which the lambda == 0 checks rely on.
struct Accum {
  long n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Accum& o) {
    if (o.n == 0) return;
    if (n == 0) { *this = o; return; }
    const double d = o.mean - mean;
    const long total = n + o.n;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * (static_cast<double>(n) * o.n / total);
    n = total;
  }
  double sem() const {
    if (n < 2 || m2 <= 0.0) return 0.0;
    return std::sqrt(m2 / (static_cast<double>(n) - 1.0) / n);
  }
};

struct ShardResult {
  Accum time, energy;
  double max_time = 0.0;
  long misses = 0;
  long capped = 0;
};

ShardResult run_shard(const std::vector<ChunkConsts>& cs, const ModelParams& p,
                      const SimConfig& cfg, long trials, std::uint64_t engine_seed) {
  std::mt19937_64 eng(engine_seed);
  ShardResult r;
  for (long trial = 0; trial < trials; ++trial) {
    double t = 0.0, e = 0.0;
    bool capped = false;
    for (const ChunkConsts& c : cs) {
      t += c.t_exec;
      e += c.e_exec;
      if (cfg.model == FailureModel::SingleRetry) {
        if (u01(eng) < c.p_fail) {
          t += c.t_rec;
          e += c.e_rec;
        }
      } else if (u01(eng) < c.p_fail_exp) {
        long attempts = 0;
        for (;;) {
          t += c.t_rec;
          e += c.e_rec;
          ++attempts;
          if (u01(eng) >= c.p_refail_exp) break;
          if (attempts >= cfg.retry_cap) {
            capped = true;
            break;
          }
        }
      }
    }
    r.time.add(t);
    r.energy.add(e);
    if (t > r.max_time) r.max_time = t;
    if (t > p.D) ++r.misses;
    if (capped) ++r.capped;
  }
  return r;
}

}  // namespace

SimStats simulate(const ModelParams& p, const Plan& plan, const SimConfig& cfg) {
  validate_plan(p, plan);
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (cfg.retry_cap < 1) throw std::invalid_argument("retry_cap must be >= 1");

  std::vector<ChunkConsts> cs;
  cs.reserve(plan.chunks.size());
  bool clamped = false;
  for (const Chunk& c : plan.chunks) {
    ChunkConsts k{};
    k.t_exec = c.w / c.s + p.tc;
    k.t_rec = c.w / c.sigma + p.tc;
    k.e_exec = c.w * c.s * c.s + p.ec;
    k.e_rec = c.w * c.sigma * c.sigma + p.ec;
    const double raw = p.lambda * k.t_exec;
    k.p_fail = std::clamp(raw, 0.0, 1.0);
    if (k.p_fail != raw) clamped = true;
    k.p_fail_exp = -std::expm1(-p.lambda * k.t_exec);
    k.p_refail_exp = -std::expm1(-p.lambda * k.t_rec);
    cs.push_back(k);
  }

  const int shards = static_cast<int>(std::min<long>(kShards, cfg.trials));
  std::vector<long> counts(shards);
  for (int k = 0; k < shards; ++k)
    counts[k] = cfg.trials * (k + 1) / shards - cfg.trials * k / shards;

  std::vector<ShardResult> results(shards);
  int workers = cfg.threads;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, shards);
  if (workers == 1) {
    for (int k = 0; k < shards; ++k)
      results[k] = run_shard(cs, p, cfg, counts[k], splitmix64(cfg.seed ^ (k + 1ULL)));
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int k = next.fetch_add(1); k < shards; k = next.fetch_add(1))
          results[k] = run_shard(cs, p, cfg, counts[k], splitmix64(cfg.seed ^ (k + 1ULL)));
      });
    for (auto& th : pool) th.join();
  }

  Accum time, energy;
  SimStats out;
  for (const ShardResult& r : results) {  // fixed shard order keeps merges exact
    time.merge(r.time);
    energy.merge(r.energy);
    out.max_time = std::max(out.max_time, r.max_time);
    out.capped_trials += r.capped;
    out.deadline_miss_rate_expected += static_cast<double>(r.misses);
  }
  out.trials = cfg.trials;
  out.mean_time = time.mean;
  out.mean_energy = energy.mean;
  out.sem_time = time.sem();
  out.sem_energy = energy.sem();
  out.deadline_miss_rate_expected /= static_cast<double>(cfg.trials);
  out.deadline_miss_rate_hard = out.deadline_miss_rate_expected;
  out.clamped = clamped;
  return out;
}

ValidationReport validate_expectations(const ModelParams& p, const Plan& plan,
                                       const SimConfig& cfg) {
  ValidationReport rep;
  rep.stats = simulate(p, plan, cfg);

  const EvalResult lin = evaluate(p, plan);
  if (cfg.model == FailureModel::SingleRetry) {
    rep.analytic_time = lin.expected_time;
    rep.analytic_energy = lin.expected_energy;
    if (lin.max_fail_prob > 1.0) {
      // The linearized failure probability left [0, 1]; the simulator clamps,
      // so the analytic expectation no longer describes what it samples.
      rep.out_of_model = true;
      rep.pass = true;
      return rep;
    }
  } else {
    for (const Chunk& c : plan.chunks) {
      ModelParams pc = p;
      pc.W = c.w;
      rep.analytic_time += exp_expected_time(pc, c.s, c.sigma);
      rep.analytic_energy += exp_expected_energy(pc, c.s, c.sigma);
    }
  }

  auto zscore = [](double mean, double ref, double sem) {
    const double diff = mean - ref;
    if (sem > 0.0) return diff / sem;
    if (diff == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), diff);
  };
  rep.z_time = zscore(rep.stats.mean_time, rep.analytic_time, rep.stats.sem_time);
  rep.z_energy = zscore(rep.stats.mean_energy, rep.analytic_energy, rep.stats.sem_energy);
  rep.pass = std::abs(rep.z_time) <= 4.0 && std::abs(rep.z_energy) <= 4.0;
  return rep;
}

}  // namespace chkpt
