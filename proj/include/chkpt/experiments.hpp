#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "chkpt/solvers.hpp"

// Parameter sweeps over the study ranges, and a numeric probe of the
// equal-chunk structure for the multi-chunk multi-speed hard-deadline case.

namespace chkpt {

inline constexpr std::array<const char*, 8> kVariantNames = {
    "scss_ed", "scms_ed", "mcss_ed", "mcms_ed",
    "scss_hd", "scms_hd", "mcss_hd", "mcms_hd"};

VariantSpec variant_by_index(int i);

struct SweepGrid {
  std::vector<double> w_over_d;
  std::vector<double> tc_over_d;
  std::vector<double> ec;
  std::vector<double> lambda;
  double d = 1.0;

  static SweepGrid defaults();
  void validate() const;
};

struct VariantCell {
  SolveStatus status = SolveStatus::Infeasible;
  double energy = 0.0;
  long n = 0;
};

struct SweepRow {
  double w_over_d = 0.0, tc_over_d = 0.0, ec = 0.0, lambda = 0.0;
  std::array<VariantCell, 8> cells{};
};

// One row per grid point, in w_over_d, tc_over_d, ec, lambda loop order.
// threads = 0 uses all hardware threads; the result does not depend on it.
std::vector<SweepRow> run_sweep(const SweepGrid& grid, const SolverConfig& cfg = {},
                                int threads = 0);

// CSV with energies per variant, chunk counts, ratios against the
// single-chunk single-speed baseline, and expected/hard ratios per structure.
// Non-solved cells carry the literal token INFEASIBLE.
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Inverse of sweep_csv for rows whose cells are Optimal or Infeasible.
std::vector<SweepRow> parse_sweep_csv(std::istream& in);

// Writes dir/sweep.csv and gnuplot scripts under dir/plots/.
void emit_outputs(const std::vector<SweepRow>& rows, const std::filesystem::path& dir);

struct RestartReport {
  double energy = 0.0;
  bool converged = false;
  int sweeps = 0;
};

struct ProbeReport {
  long n = 0;
  double structured_energy = 0.0;  // equal chunks, shared speeds per role
  double free_energy = 0.0;        // per-chunk sizes and speeds left free
  double improvement_rel = 0.0;    // (structured - free) / structured
  double weight_spread_rel = 0.0;  // relative spread of lambda*(w/s+tc)*sigma^3
  std::vector<double> weights;
  std::vector<RestartReport> restarts;
  Plan free_plan;
  Plan structured_plan;
};

// Multi-start projected coordinate descent over free per-chunk (w, s, sigma)
// under a tight hard deadline, with recovery speeds eliminated exactly via
// their stationarity condition. Restart 0 starts from the structured plan.
ProbeReport conjecture_probe(const ModelParams& p, long n, int restarts,
                             std::uint64_t seed, const SolverConfig& cfg = {});

}  // namespace chkpt
