#include "chkpt/model.hpp"

#include <cmath>
#include <stdexcept>

namespace chkpt {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool pos(double x) { return std::isfinite(x) && x > 0.0; }
bool nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void ModelParams::validate() const {
  require(pos(W), "W must be a positive finite number");
  require(pos(D), "D must be a positive finite number");
  require(nonneg(tc), "tc must be a finite number >= 0");
  require(nonneg(ec), "ec must be a finite number >= 0");
  require(nonneg(lambda), "lambda must be a finite number >= 0");
}

std::string variant_name(const VariantSpec& v) {
  std::string s;
  s += (v.chunks == ChunkMode::Single) ? "sc" : "mc";
  s += (v.speeds == SpeedMode::Single) ? "ss" : "ms";
  s += (v.deadline == DeadlineMode::Expected) ? "_ed" : "_hd";
  return s;
}

void validate_plan(const ModelParams& p, const Plan& plan) {
  p.validate();
  require(!plan.chunks.empty(), "plan must contain at least one chunk");
  double total = 0.0;
  for (const Chunk& c : plan.chunks) {
    require(pos(c.w), "chunk work must be positive");
    require(pos(c.s), "chunk speed must be positive");
    require(pos(c.sigma), "chunk recovery speed must be positive");
    total += c.w;
  }
  require(std::abs(total - p.W) <= 1e-9 * p.W, "chunk sizes must sum to W");
}

EvalResult evaluate(const ModelParams& p, const Plan& plan) {
  validate_plan(p, plan);
  EvalResult r;
  for (const Chunk& c : plan.chunks) {
    const double t = c.w / c.s + p.tc;          // first attempt, checkpoint included
    const double tr = c.w / c.sigma + p.tc;     // recovery attempt
    const double e = c.w * c.s * c.s + p.ec;
    const double er = c.w * c.sigma * c.sigma + p.ec;
    const double pf = p.lambda * t;
    r.expected_time += t;
    r.expected_time += pf * tr;
    r.worst_time += t + tr;
    r.expected_energy += e;
    r.expected_energy += pf * er;
    if (pf > r.max_fail_prob) r.max_fail_prob = pf;
  }
  return r;
}

double expected_time(const ModelParams& p, const Plan& plan) {
  return evaluate(p, plan).expected_time;
}

double worst_time(const ModelParams& p, const Plan& plan) {
  return evaluate(p, plan).worst_time;
}

double expected_energy(const ModelParams& p, const Plan& plan) {
  return evaluate(p, plan).expected_energy;
}

double exp_expected_time(const ModelParams& p, double s, double sigma) {
  p.validate();
  require(pos(s) && pos(sigma), "speeds must be positive");
  const double t = p.W / s + p.tc;
  const double tr = p.W / sigma + p.tc;
  // P(first attempt fails) = 1 - e^{-lambda t}; each recovery attempt fails
  // with 1 - e^{-lambda tr}, so the expected number of recoveries is
  // e^{lambda tr} (1 - e^{-lambda t}).
  const double retries = std::exp(p.lambda * tr) * (-std::expm1(-p.lambda * t));
  return t + retries * tr;
}

double exp_expected_energy(const ModelParams& p, double s, double sigma) {
  p.validate();
  require(pos(s) && pos(sigma), "speeds must be positive");
  const double t = p.W / s + p.tc;
  const double tr = p.W / sigma + p.tc;
  const double e = p.W * s * s + p.ec;
  const double er = p.W * sigma * sigma + p.ec;
  const double retries = std::exp(p.lambda * tr) * (-std::expm1(-p.lambda * t));
  return e + retries * er;
}

TaylorGap taylor_gap(const ModelParams& p, double s, double sigma) {
  Plan one{{Chunk{p.W, s, sigma}}};
  const EvalResult lin = evaluate(p, one);
  return TaylorGap{exp_expected_time(p, s, sigma) - lin.expected_time,
                   exp_expected_energy(p, s, sigma) - lin.expected_energy};
}

}  // namespace chkpt
