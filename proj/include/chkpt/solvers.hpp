#pragma once

#include <functional>
#include <optional>
#include <string>

#include "chkpt/model.hpp"

// Energy minimization for the eight plan structures: one chunk or several
// equal chunks, shared or separate recovery speed, expected or hard deadline.

namespace chkpt {

enum class SolveStatus { Optimal, Infeasible, NumericLimit };

std::string status_name(SolveStatus s);

struct SolveOutcome {
  SolveStatus status = SolveStatus::Infeasible;
  std::optional<Plan> plan;  // absent iff Infeasible
  EvalResult eval{};
  long n = 0;           // number of chunks in the plan
  std::string reason;   // set when status != Optimal
};

struct SolverConfig {
  double rel_tol = 1e-10;            // golden-section interval width, relative
  double bracket_growth = 2.0;
  int max_doublings = 200;
  long n_max_cap = 1000000;          // chunk-count bound when tc leaves it open
  double sigma_ceiling_factor = 1e6; // recovery-speed cap = factor*W/D at tiny lambda
  double lambda_tiny = 1e-12;        // below this the induced recovery speed degenerates
};

struct MinimizeResult {
  double x = 0.0;
  double fx = 0.0;
  SolveStatus status = SolveStatus::Optimal;
};

// Minimizes f over (lo, +inf), assuming f(x) -> +inf toward both ends.
// Brackets by geometric growth from hi_hint, then refines with golden
// section seeded from a coarse log-spaced scan; the scan guards against
// mild non-unimodality. NumericLimit if growth never sees f rise.
MinimizeResult minimize_unimodal(const std::function<double(double)>& f,
                                 double lo, double hi_hint,
                                 const SolverConfig& cfg = {});

// Unconstrained energy-optimal shared speed, i.e. the unique positive root of
//   2 W (1+lambda tc) s + lambda W^2 - lambda W ec / s^2 = 0.
// Newton with bisection safeguards; returns 0 when lambda*ec == 0, where the
// energy is increasing and no interior optimum exists.
double sstar_newton(const ModelParams& p);

// Same root in closed form via the cubic's radicals. Throws std::domain_error
// when lambda*ec == 0. Kept as a cross-check; the Newton root is the one the
// solvers use.
double sstar_closed_form(const ModelParams& p);

// Slowest shared speed meeting the expected deadline, or nullopt when even
// checkpointing alone exceeds it (tc*(1+lambda*tc) >= D).
std::optional<double> s0_ed(const ModelParams& p);

SolveOutcome solve_scss(const ModelParams& p, DeadlineMode dl, const SolverConfig& cfg = {});
SolveOutcome solve_scms(const ModelParams& p, DeadlineMode dl, const SolverConfig& cfg = {});

// n equal chunks of the original instance behave exactly like one chunk of
// the instance with lambda/n, n*tc, n*ec.
ModelParams reduce_params(const ModelParams& p, long n);

// Largest feasible chunk count for the variant's deadline mode (0 if none).
long n_max(const ModelParams& p, const VariantSpec& v, const SolverConfig& cfg = {});

SolveOutcome solve_mc_fixed(const ModelParams& p, long n, SpeedMode speeds,
                            DeadlineMode dl, const SolverConfig& cfg = {});

// Exhaustive search over n in 1..n_max; ties within 1e-12 relative keep the
// smaller chunk count.
SolveOutcome solve_mc(const ModelParams& p, SpeedMode speeds, DeadlineMode dl,
                      const SolverConfig& cfg = {});

SolveOutcome solve_variant(const ModelParams& p, const VariantSpec& v,
                           const SolverConfig& cfg = {});

}  // namespace chkpt
