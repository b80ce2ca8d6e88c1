#include "chkpt/solvers.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace chkpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SolveOutcome infeasible(std::string reason) {
  SolveOutcome out;
  out.status = SolveStatus::Infeasible;
  out.reason = std::move(reason);
  return out;
}

SolveOutcome finish(SolveStatus status, const ModelParams& p, Plan plan, long n,
                    std::string reason = {}) {
  SolveOutcome out;
  out.status = status;
  out.eval = evaluate(p, plan);
  out.plan = std::move(plan);
  out.n = n;
  out.reason = std::move(reason);
  return out;
}

}  // namespace

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericLimit: return "numeric-limit";
  }
  return "unknown";
}

MinimizeResult minimize_unimodal(const std::function<double(double)>& f,
                                 double lo, double hi_hint,
                                 const SolverConfig& cfg) {
  double best_x = std::numeric_limits<double>::quiet_NaN();
  double best_f = kInf;
  auto eval = [&](double x) {
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
    return v;
  };

  if (!(hi_hint > lo)) hi_hint = (lo > 0.0) ? lo * 2.0 : 1.0;

  // Grow the right edge until the function starts rising past a finite value.
  double hi = hi_hint;
  double f_prev = eval(hi);
  bool bracketed = false;
  for (int k = 0; k < cfg.max_doublings; ++k) {
    const double x_next = lo + (hi - lo) * cfg.bracket_growth;
    const double f_next = eval(x_next);
    hi = x_next;
    if (std::isfinite(f_prev) && f_next > f_prev) {
      bracketed = true;
      break;
    }
    f_prev = f_next;
  }
  if (!bracketed) return {best_x, best_f, SolveStatus::NumericLimit};

  // Coarse scan, log-spaced in the offset from lo so boundary layers near the
  // feasibility edge are still sampled.
  constexpr int kScan = 64;
  const double span = hi - lo;
  std::array<double, kScan> xs{};
  int jbest = kScan - 1;
  double fbest = kInf;
  for (int j = 0; j < kScan; ++j) {
    xs[j] = lo + span * std::pow(10.0, -12.0 * (kScan - 1 - j) / (kScan - 1));
    const double v = eval(xs[j]);
    if (v < fbest) {
      fbest = v;
      jbest = j;
    }
  }
  double a = (jbest == 0) ? lo : xs[jbest - 1];
  double b = (jbest == kScan - 1) ? hi : xs[jbest + 1];

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = eval(x1);
  double f2 = eval(x2);
  for (int it = 0; it < 400; ++it) {
    if (b - a <= cfg.rel_tol * 0.5 * (std::abs(a) + std::abs(b))) break;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = eval(x2);
    }
  }
  return {best_x, best_f, SolveStatus::Optimal};
}

double sstar_newton(const ModelParams& p) {
  p.validate();
  if (p.lambda * p.ec == 0.0) return 0.0;
  const double A = 2.0 * p.W * (1.0 + p.lambda * p.tc);
  const double B = p.lambda * p.W * p.W;
  const double C = p.lambda * p.W * p.ec;
  auto dg = [&](double s) { return A * s + B - C / (s * s); };

  // A*s^3 <= C at the root, so cbrt(C/A) starts on the nonnegative side.
  double hi = std::cbrt(C / A);
  for (int k = 0; k < 4200 && dg(hi) < 0.0; ++k) hi *= 2.0;
  double lo = hi;
  for (int k = 0; k < 4200 && dg(lo) > 0.0; ++k) lo *= 0.5;

  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double g1 = dg(s);
    if (g1 > 0.0) hi = s; else lo = s;
    const double g2 = A + 2.0 * C / (s * s * s);
    double next = s - g1 / g2;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 4.0 * std::numeric_limits<double>::epsilon() * s) {
      s = next;
      break;
    }
    s = next;
  }
  return s;
}

double sstar_closed_form(const ModelParams& p) {
  p.validate();
  if (p.lambda * p.ec == 0.0)
    throw std::domain_error("sstar_closed_form: no interior optimum when lambda*ec == 0");
  const double k = 1.0 + p.lambda * p.tc;
  const double lw = p.lambda * p.W;
  const double q = 2.0 * k / lw;
  const double a = p.ec * q * q / p.W;

  // Positive root of X^3 + X^2 - a = 0, via Cardano; s* = lw * X / (2k).
  const double rad = 27.0 * a * a - 4.0 * a;
  double bracket;  // equals 3*X
  if (rad >= 0.0) {
    // One real root regime. B = 3*sqrt(3)*sqrt(rad) - 27a + 2 cancels badly
    // for large a; the rationalized form keeps full precision.
    const double B = -4.0 / (27.0 * a - 2.0 + 3.0 * std::sqrt(3.0) * std::sqrt(rad));
    const double cb = std::cbrt(B / 2.0);
    bracket = -cb - 1.0 / cb - 1.0;
  } else {
    // Three real roots; the radicand turns negative and the real cube root
    // continues onto the complex branch with argument arg(B)/3 + 2*pi/3,
    // which keeps selecting the positive root. |B| = 2 identically.
    const double re = 2.0 - 27.0 * a;
    const double im = 3.0 * std::sqrt(3.0) * std::sqrt(-rad);
    const double rho = std::cbrt(std::hypot(re, im) / 2.0);
    const double psi = std::atan2(im, re) / 3.0 + 2.0 * std::numbers::pi / 3.0;
    bracket = -(rho + 1.0 / rho) * std::cos(psi) - 1.0;
  }
  return lw / (6.0 * k) * bracket;
}

std::optional<double> s0_ed(const ModelParams& p) {
  p.validate();
  const double floor_time = p.tc * (1.0 + p.lambda * p.tc);  // limit of E[T] as s -> inf
  if (floor_time >= p.D) return std::nullopt;
  return p.W * (1.0 + 2.0 * p.lambda * p.tc + std::sqrt(4.0 * p.lambda * p.D + 1.0)) /
         (2.0 * (p.D - floor_time));
}

SolveOutcome solve_scss(const ModelParams& p, DeadlineMode dl, const SolverConfig&) {
  p.validate();
  double s_min;
  if (dl == DeadlineMode::Expected) {
    const auto s0 = s0_ed(p);
    if (!s0) return infeasible("expected deadline unreachable: tc*(1+lambda*tc) >= D");
    s_min = *s0;
  } else {
    if (2.0 * p.tc >= p.D) return infeasible("hard deadline unreachable: 2*tc >= D");
    s_min = p.W / (p.D / 2.0 - p.tc);
  }
  const double s = std::max(s_min, sstar_newton(p));
  return finish(SolveStatus::Optimal, p, Plan{{Chunk{p.W, s, s}}}, 1);
}

SolveOutcome solve_scms(const ModelParams& p, DeadlineMode dl, const SolverConfig& cfg) {
  p.validate();
  if (dl == DeadlineMode::Expected) {
    if (p.tc * (1.0 + p.lambda * p.tc) >= p.D)
      return infeasible("expected deadline unreachable: tc*(1+lambda*tc) >= D");
  } else {
    if (2.0 * p.tc >= p.D)
      return infeasible("hard deadline unreachable: 2*tc >= D");
  }

  if (p.lambda < cfg.lambda_tiny) {
    // The induced recovery speed vanishes with lambda and the energy becomes
    // insensitive to it; pin it to the ceiling and keep the deadline tight.
    const double sigma = cfg.sigma_ceiling_factor * p.W / p.D;
    double denom;
    if (dl == DeadlineMode::Expected)
      denom = p.D / (1.0 + p.lambda * (p.W / sigma + p.tc)) - p.tc;
    else
      denom = p.D - 2.0 * p.tc - p.W / sigma;
    if (!(denom > 0.0))
      return infeasible("deadline unreachable at the recovery-speed ceiling");
    const double s = p.W / denom;
    return finish(SolveStatus::NumericLimit, p, Plan{{Chunk{p.W, s, sigma}}}, 1,
                  "lambda below tiny threshold: recovery speed pinned to ceiling");
  }

  // On an optimal plan the deadline is tight, which induces the recovery
  // speed from the first-execution speed.
  const double k = 1.0 + p.lambda * p.tc;
  auto sigma_of = [&](double s) -> double {
    if (dl == DeadlineMode::Expected) {
      const double t = p.W / s + p.tc;
      return p.lambda * p.W / (p.D / t - k);
    }
    return p.W * s / ((p.D - 2.0 * p.tc) * s - p.W);
  };
  double lo;
  if (dl == DeadlineMode::Expected)
    lo = p.W / (p.D / k - p.tc);
  else
    lo = p.W / (p.D - 2.0 * p.tc);

  auto objective = [&](double s) -> double {
    const double sigma = sigma_of(s);
    if (!(sigma > 0.0)) return kInf;
    const double t = p.W / s + p.tc;
    return p.W * s * s + p.ec + p.lambda * t * (p.W * sigma * sigma + p.ec);
  };
  const MinimizeResult m = minimize_unimodal(objective, lo, 2.0 * lo, cfg);
  if (!std::isfinite(m.x) || !(sigma_of(m.x) > 0.0))
    return infeasible("no interior optimum found on the tight-deadline curve");
  Plan plan{{Chunk{p.W, m.x, sigma_of(m.x)}}};
  std::string reason = (m.status == SolveStatus::Optimal) ? "" : "bracketing hit the growth cap";
  return finish(m.status, p, std::move(plan), 1, std::move(reason));
}

ModelParams reduce_params(const ModelParams& p, long n) {
  p.validate();
  if (n < 1) throw std::invalid_argument("chunk count must be >= 1");
  ModelParams r = p;
  r.tc = n * p.tc;
  r.ec = n * p.ec;
  r.lambda = p.lambda / n;
  return r;
}

long n_max(const ModelParams& p, const VariantSpec& v, const SolverConfig& cfg) {
  p.validate();
  if (p.tc == 0.0) return cfg.n_max_cap;
  auto fits = [&](long m) {
    if (v.deadline == DeadlineMode::Expected)
      return static_cast<double>(m) * p.tc * (1.0 + p.lambda * p.tc) < p.D;
    return 2.0 * static_cast<double>(m) * p.tc < p.D;
  };
  const double bound = (v.deadline == DeadlineMode::Expected)
                           ? p.D / (p.tc * (1.0 + p.lambda * p.tc))
                           : p.D / (2.0 * p.tc);
  long n = (bound < 1.0) ? 0 : static_cast<long>(std::floor(bound));
  if (n > cfg.n_max_cap) n = cfg.n_max_cap;
  while (n >= 1 && !fits(n)) --n;
  while (n < cfg.n_max_cap && fits(n + 1)) ++n;  // floor may round one short
  return n;
}

namespace {

// Solves the reduced single-chunk instance for chunk count n (no expansion).
SolveOutcome solve_reduced(const ModelParams& p, long n, SpeedMode speeds,
                           DeadlineMode dl, const SolverConfig& cfg) {
  const ModelParams r = reduce_params(p, n);
  return (speeds == SpeedMode::Single) ? solve_scss(r, dl, cfg) : solve_scms(r, dl, cfg);
}

}  // namespace

SolveOutcome solve_mc_fixed(const ModelParams& p, long n, SpeedMode speeds,
                            DeadlineMode dl, const SolverConfig& cfg) {
  SolveOutcome inner = solve_reduced(p, n, speeds, dl, cfg);
  if (!inner.plan) {
    inner.n = n;
    return inner;
  }
  const Chunk c = inner.plan->chunks[0];
  Plan plan;
  plan.chunks.assign(static_cast<std::size_t>(n), Chunk{c.w / n, c.s, c.sigma});
  return finish(inner.status, p, std::move(plan), n, std::move(inner.reason));
}

SolveOutcome solve_mc(const ModelParams& p, SpeedMode speeds, DeadlineMode dl,
                      const SolverConfig& cfg) {
  const long nm = n_max(p, VariantSpec{ChunkMode::Multi, speeds, dl}, cfg);
  if (nm < 1)
    return infeasible(dl == DeadlineMode::Expected
                          ? "expected deadline unreachable: tc*(1+lambda*tc) >= D"
                          : "hard deadline unreachable: 2*tc >= D");
  long best_n = 0;
  double best_e = kInf;
  SolveStatus best_status = SolveStatus::Optimal;
  for (long n = 1; n <= nm; ++n) {
    const SolveOutcome inner = solve_reduced(p, n, speeds, dl, cfg);
    if (!inner.plan) continue;
    const double e = inner.eval.expected_energy;
    if (e < best_e * (1.0 - 1e-12)) {  // ties keep the smaller chunk count
      best_e = e;
      best_n = n;
      best_status = inner.status;
    }
  }
  if (best_n == 0) return infeasible("no feasible chunk count");
  (void)best_status;
  return solve_mc_fixed(p, best_n, speeds, dl, cfg);
}

SolveOutcome solve_variant(const ModelParams& p, const VariantSpec& v,
                           const SolverConfig& cfg) {
  if (v.chunks == ChunkMode::Single) {
    return (v.speeds == SpeedMode::Single) ? solve_scss(p, v.deadline, cfg)
                                           : solve_scms(p, v.deadline, cfg);
  }
  return solve_mc(p, v.speeds, v.deadline, cfg);
}

}  // namespace chkpt
