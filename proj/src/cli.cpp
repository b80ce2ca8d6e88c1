#include "chkpt/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <string_view>

#include <CLI11.hpp>
#include <json.hpp>

#include "chkpt/experiments.hpp"
#include "chkpt/format.hpp"
#include "chkpt/sim.hpp"
#include "chkpt/solvers.hpp"

namespace chkpt {
namespace {

using ordered_json = nlohmann::ordered_json;

int variant_index(const std::string& name) {
  for (int i = 0; i < 8; ++i)
    if (name == kVariantNames[i]) return i;
  throw std::invalid_argument("unknown variant: " + name);
}

int parse_int_strict(std::string_view s, const char* what) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw std::invalid_argument(std::string(what) + " must be an integer, got: " + std::string(s));
  return v;
}

// JSON rejects non-finite numbers; carry them as strings instead of null.
ordered_json json_num(double v) {
  if (std::isfinite(v)) return ordered_json(v);
  return ordered_json(fmt_shortest(v));
}

ordered_json plan_json(const Plan& plan) {
  ordered_json chunks = ordered_json::array();
  for (const Chunk& c : plan.chunks)
    chunks.push_back(ordered_json{{"w", c.w}, {"s", c.s}, {"sigma", c.sigma}});
  return ordered_json{{"chunks", std::move(chunks)}};
}

Plan plan_from_json(const ordered_json& j) {
  Plan plan;
  for (const auto& cj : j.at("chunks"))
    plan.chunks.push_back(Chunk{cj.at("w").get<double>(), cj.at("s").get<double>(),
                                cj.at("sigma").get<double>()});
  return plan;
}

Plan load_plan(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open plan file: " + path);
  return plan_from_json(ordered_json::parse(f));
}

void save_plan(const std::string& path, const Plan& plan) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << plan_json(plan).dump(2) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path);
}

void kv(std::ostream& out, const char* key, const std::string& value) {
  std::string k(key);
  k.resize(18, ' ');
  out << k << value << '\n';
}

int status_exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return 0;
    case SolveStatus::NumericLimit: return 1;
    case SolveStatus::Infeasible: return 2;
  }
  return 1;
}

void add_model_options(CLI::App* cmd, ModelParams& p) {
  cmd->add_option("-W,--work", p.W, "total work")->capture_default_str();
  cmd->add_option("-D,--deadline", p.D, "deadline")->capture_default_str();
  cmd->add_option("--tc", p.tc, "checkpoint time")->capture_default_str();
  cmd->add_option("--ec", p.ec, "checkpoint energy")->capture_default_str();
  cmd->add_option("-l,--lambda", p.lambda, "failure rate")->capture_default_str();
}

void add_format_option(CLI::App* cmd, std::string& fmt) {
  cmd->add_option("-f,--format", fmt, "output format")
      ->check(CLI::IsMember({"human", "json", "csv"}))
      ->capture_default_str();
}

struct SolveOpts {
  ModelParams p;
  std::string variant = "scss_ed";
  std::string format = "human";
  std::string plan_out;
};

ordered_json outcome_json(const std::string& variant, const SolveOutcome& r) {
  ordered_json j{{"variant", variant}, {"status", status_name(r.status)}, {"n", r.n}};
  if (r.plan) {
    j["expected_time"] = r.eval.expected_time;
    j["worst_time"] = r.eval.worst_time;
    j["expected_energy"] = r.eval.expected_energy;
    j["max_fail_prob"] = r.eval.max_fail_prob;
    j["plan"] = plan_json(*r.plan);
  }
  if (!r.reason.empty()) j["reason"] = r.reason;
  return j;
}

int do_solve(const SolveOpts& o, std::ostream& out) {
  o.p.validate();
  const SolveOutcome r = solve_variant(o.p, variant_by_index(variant_index(o.variant)));
  if (o.format == "json") {
    out << outcome_json(o.variant, r).dump(2) << '\n';
  } else if (o.format == "csv") {
    out << "field,value\n";
    out << "variant," << o.variant << '\n';
    out << "status," << status_name(r.status) << '\n';
    out << "n," << r.n << '\n';
    if (r.plan) {
      out << "expected_time," << fmt_shortest(r.eval.expected_time) << '\n';
      out << "worst_time," << fmt_shortest(r.eval.worst_time) << '\n';
      out << "expected_energy," << fmt_shortest(r.eval.expected_energy) << '\n';
      out << "max_fail_prob," << fmt_shortest(r.eval.max_fail_prob) << '\n';
      for (std::size_t i = 0; i < r.plan->chunks.size(); ++i) {
        const Chunk& c = r.plan->chunks[i];
        out << "chunk" << i << "_w," << fmt_shortest(c.w) << '\n';
        out << "chunk" << i << "_s," << fmt_shortest(c.s) << '\n';
        out << "chunk" << i << "_sigma," << fmt_shortest(c.sigma) << '\n';
      }
    }
    if (!r.reason.empty()) out << "reason," << r.reason << '\n';
  } else {
    kv(out, "variant", o.variant);
    kv(out, "status", status_name(r.status));
    kv(out, "chunks", std::to_string(r.n));
    if (r.plan) {
      kv(out, "expected time", fmt_g6(r.eval.expected_time));
      kv(out, "worst time", fmt_g6(r.eval.worst_time));
      kv(out, "expected energy", fmt_g6(r.eval.expected_energy));
      kv(out, "max fail prob", fmt_g6(r.eval.max_fail_prob));
      const Plan& plan = *r.plan;
      const std::size_t show = std::min<std::size_t>(plan.chunks.size(), 8);
      for (std::size_t i = 0; i < show; ++i) {
        const Chunk& c = plan.chunks[i];
        out << "chunk " << i << ": w=" << fmt_g6(c.w) << " s=" << fmt_g6(c.s)
            << " sigma=" << fmt_g6(c.sigma) << '\n';
      }
      if (plan.chunks.size() > show)
        out << "... " << (plan.chunks.size() - show) << " more identical chunks\n";
    }
    if (!r.reason.empty()) kv(out, "reason", r.reason);
  }
  if (r.plan && !o.plan_out.empty()) save_plan(o.plan_out, *r.plan);
  return status_exit_code(r.status);
}

struct SimulateOpts {
  ModelParams p;
  std::string variant;
  std::string plan_path;
  std::string model = "linear";
  std::string format = "human";
  SimConfig cfg;
};

int do_simulate(const SimulateOpts& o, std::ostream& out, std::ostream& err) {
  o.p.validate();
  if (o.cfg.trials <= 0) throw std::invalid_argument("trials must be positive");
  if (o.cfg.retry_cap <= 0) throw std::invalid_argument("retry-cap must be positive");

  Plan plan;
  if (!o.plan_path.empty()) {
    plan = load_plan(o.plan_path);
    validate_plan(o.p, plan);
  } else if (!o.variant.empty()) {
    const SolveOutcome r = solve_variant(o.p, variant_by_index(variant_index(o.variant)));
    if (r.status != SolveStatus::Optimal) {
      err << "cannot simulate " << o.variant << ": " << status_name(r.status)
          << (r.reason.empty() ? "" : " (" + r.reason + ")") << '\n';
      return status_exit_code(r.status);
    }
    plan = *r.plan;
  } else {
    throw std::invalid_argument("simulate needs --variant or --plan");
  }

  SimConfig cfg = o.cfg;
  cfg.model = (o.model == "exponential") ? FailureModel::Exponential : FailureModel::SingleRetry;
  const ValidationReport rep = validate_expectations(o.p, plan, cfg);
  const SimStats& st = rep.stats;

  if (o.format == "json") {
    ordered_json j{{"model", o.model},
                   {"trials", st.trials},
                   {"seed", o.cfg.seed},
                   {"mean_time", st.mean_time},
                   {"mean_energy", st.mean_energy},
                   {"sem_time", st.sem_time},
                   {"sem_energy", st.sem_energy},
                   {"analytic_time", rep.analytic_time},
                   {"analytic_energy", rep.analytic_energy},
                   {"z_time", json_num(rep.z_time)},
                   {"z_energy", json_num(rep.z_energy)},
                   {"max_time", st.max_time},
                   {"deadline_miss_rate_expected", st.deadline_miss_rate_expected},
                   {"deadline_miss_rate_hard", st.deadline_miss_rate_hard},
                   {"capped_trials", st.capped_trials},
                   {"clamped", st.clamped},
                   {"out_of_model", rep.out_of_model},
                   {"pass", rep.pass}};
    out << j.dump(2) << '\n';
  } else if (o.format == "csv") {
    out << "field,value\n";
    out << "model," << o.model << '\n';
    out << "trials," << st.trials << '\n';
    out << "mean_time," << fmt_shortest(st.mean_time) << '\n';
    out << "mean_energy," << fmt_shortest(st.mean_energy) << '\n';
    out << "sem_time," << fmt_shortest(st.sem_time) << '\n';
    out << "sem_energy," << fmt_shortest(st.sem_energy) << '\n';
    out << "analytic_time," << fmt_shortest(rep.analytic_time) << '\n';
    out << "analytic_energy," << fmt_shortest(rep.analytic_energy) << '\n';
    out << "z_time," << fmt_shortest(rep.z_time) << '\n';
    out << "z_energy," << fmt_shortest(rep.z_energy) << '\n';
    out << "max_time," << fmt_shortest(st.max_time) << '\n';
    out << "deadline_miss_rate_expected," << fmt_shortest(st.deadline_miss_rate_expected) << '\n';
    out << "deadline_miss_rate_hard," << fmt_shortest(st.deadline_miss_rate_hard) << '\n';
    out << "capped_trials," << st.capped_trials << '\n';
    out << "clamped," << (st.clamped ? 1 : 0) << '\n';
    out << "out_of_model," << (rep.out_of_model ? 1 : 0) << '\n';
    out << "pass," << (rep.pass ? 1 : 0) << '\n';
  } else {
    kv(out, "model", o.model);
    kv(out, "trials", std::to_string(st.trials));
    kv(out, "mean time", fmt_g6(st.mean_time) + "  (analytic " + fmt_g6(rep.analytic_time) +
                             ", z " + fmt_g6(rep.z_time) + ")");
    kv(out, "mean energy", fmt_g6(st.mean_energy) + "  (analytic " + fmt_g6(rep.analytic_energy) +
                               ", z " + fmt_g6(rep.z_energy) + ")");
    kv(out, "max time", fmt_g6(st.max_time));
    kv(out, "miss rate", fmt_g6(st.deadline_miss_rate_expected));
    if (st.capped_trials > 0) kv(out, "capped trials", std::to_string(st.capped_trials));
    if (st.clamped) kv(out, "clamped", "yes");
    if (rep.out_of_model) kv(out, "out of model", "yes (comparison skipped)");
    kv(out, "verdict", rep.pass ? "PASS" : "FAIL");
  }
  return rep.pass ? 0 : 3;
}

struct SweepOpts {
  SweepGrid grid = SweepGrid::defaults();
  std::string out_dir;
  int threads = -1;  // -1: CHKPT_ENERGY_THREADS, else auto
  std::string format = "human";
};

int do_sweep(const SweepOpts& o, std::ostream& out) {
  int threads = o.threads;
  if (threads < 0) {
    const char* env = std::getenv("CHKPT_ENERGY_THREADS");
    threads = (env && *env) ? parse_int_strict(env, "CHKPT_ENERGY_THREADS") : 0;
  }
  const std::vector<SweepRow> rows = run_sweep(o.grid, SolverConfig{}, threads);
  emit_outputs(rows, o.out_dir);

  long infeasible = 0;
  for (const SweepRow& r : rows)
    for (const VariantCell& c : r.cells)
      if (c.status == SolveStatus::Infeasible) ++infeasible;

  const std::string csv_path = (std::filesystem::path(o.out_dir) / "sweep.csv").string();
  const std::vector<std::string> plots = {
      (std::filesystem::path(o.out_dir) / "plots" / "ratio_vs_scss.gp").string(),
      (std::filesystem::path(o.out_dir) / "plots" / "ed_over_hd.gp").string()};
  if (o.format == "json") {
    ordered_json j{{"rows", rows.size()},
                   {"cells", rows.size() * 8},
                   {"infeasible_cells", infeasible},
                   {"csv", csv_path},
                   {"plots", plots}};
    out << j.dump(2) << '\n';
  } else if (o.format == "csv") {
    out << "field,value\n";
    out << "rows," << rows.size() << '\n';
    out << "infeasible_cells," << infeasible << '\n';
    out << "csv," << csv_path << '\n';
  } else {
    kv(out, "rows", std::to_string(rows.size()));
    kv(out, "infeasible cells", std::to_string(infeasible));
    kv(out, "csv", csv_path);
    kv(out, "plots", plots[0] + " " + plots[1]);
  }
  return 0;
}

struct ProbeOpts {
  ModelParams p{1.0, 1.0, 0.0, 0.0, 0.0};
  long n = 2;
  int restarts = 8;
  std::uint64_t seed = 1;
  std::string format = "human";
};

int do_probe(const ProbeOpts& o, std::ostream& out) {
  o.p.validate();
  const ProbeReport rep = conjecture_probe(o.p, o.n, o.restarts, o.seed);
  if (o.format == "json") {
    ordered_json restarts = ordered_json::array();
    for (const RestartReport& r : rep.restarts)
      restarts.push_back(
          ordered_json{{"energy", r.energy}, {"converged", r.converged}, {"sweeps", r.sweeps}});
    ordered_json j{{"n", rep.n},
                   {"structured_energy", rep.structured_energy},
                   {"free_energy", rep.free_energy},
                   {"improvement_rel", rep.improvement_rel},
                   {"weight_spread_rel", rep.weight_spread_rel},
                   {"weights", rep.weights},
                   {"restarts", std::move(restarts)},
                   {"structured_plan", plan_json(rep.structured_plan)},
                   {"free_plan", plan_json(rep.free_plan)}};
    out << j.dump(2) << '\n';
  } else if (o.format == "csv") {
    out << "field,value\n";
    out << "n," << rep.n << '\n';
    out << "structured_energy," << fmt_shortest(rep.structured_energy) << '\n';
    out << "free_energy," << fmt_shortest(rep.free_energy) << '\n';
    out << "improvement_rel," << fmt_shortest(rep.improvement_rel) << '\n';
    out << "weight_spread_rel," << fmt_shortest(rep.weight_spread_rel) << '\n';
  } else {
    kv(out, "chunks", std::to_string(rep.n));
    kv(out, "structured energy", fmt_g6(rep.structured_energy));
    kv(out, "free energy", fmt_g6(rep.free_energy));
    kv(out, "improvement", fmt_g6(rep.improvement_rel) + " relative");
    kv(out, "weight spread", fmt_g6(rep.weight_spread_rel) + " relative");
    for (std::size_t i = 0; i < rep.restarts.size(); ++i) {
      const RestartReport& r = rep.restarts[i];
      out << "restart " << i << ": energy " << fmt_g6(r.energy) << ", "
          << (r.converged ? "converged" : "sweep limit") << " after " << r.sweeps << " sweeps\n";
    }
  }
  return 0;
}

struct CompareOpts {
  ModelParams p;
  std::string format = "human";
};

int do_compare(const CompareOpts& o, std::ostream& out) {
  o.p.validate();
  std::array<SolveOutcome, 8> results;
  for (int i = 0; i < 8; ++i) results[i] = solve_variant(o.p, variant_by_index(i));

  auto ratio_text = [&](int i) -> std::string {
    const SolveOutcome& num = results[i];
    const SolveOutcome& den = results[(i < 4) ? 0 : 4];
    if (num.status != SolveStatus::Optimal || den.status != SolveStatus::Optimal)
      return "INFEASIBLE";
    return fmt_shortest(num.eval.expected_energy / den.eval.expected_energy);
  };

  if (o.format == "json") {
    ordered_json arr = ordered_json::array();
    for (int i = 0; i < 8; ++i) {
      const SolveOutcome& r = results[i];
      ordered_json j = outcome_json(kVariantNames[i], r);
      j.erase("plan");
      if (r.status == SolveStatus::Optimal)
        j["ratio_vs_scss"] = r.eval.expected_energy /
                             results[(i < 4) ? 0 : 4].eval.expected_energy;
      arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
  } else if (o.format == "csv") {
    out << "variant,status,n,expected_energy,ratio_vs_scss\n";
    for (int i = 0; i < 8; ++i) {
      const SolveOutcome& r = results[i];
      out << kVariantNames[i] << ',' << status_name(r.status) << ',' << r.n << ','
          << (r.plan ? fmt_shortest(r.eval.expected_energy) : "INFEASIBLE") << ','
          << ratio_text(i) << '\n';
    }
  } else {
    out << "variant   status         n      energy        vs scss\n";
    for (int i = 0; i < 8; ++i) {
      const SolveOutcome& r = results[i];
      std::string row(kVariantNames[i]);
      row.resize(10, ' ');
      std::string st = status_name(r.status);
      st.resize(15, ' ');
      std::string n = std::to_string(r.n);
      n.resize(7, ' ');
      std::string e = r.plan ? fmt_g6(r.eval.expected_energy) : "-";
      e.resize(14, ' ');
      out << row << st << n << e
          << (ratio_text(i) == "INFEASIBLE" ? std::string("-") : fmt_g6(std::stod(ratio_text(i))))
          << '\n';
    }
  }
  bool any_solved = false;
  for (const SolveOutcome& r : results)
    if (r.status == SolveStatus::Optimal) any_solved = true;
  return any_solved ? 0 : 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"energy-minimal speed scaling for checkpointed workloads under failures",
               "chkpt-energy"};
  app.require_subcommand(1);
  // Option defaults can come from an ini file; keys live under a [subcommand]
  // section, and explicit flags always win. Fallthrough lets --config appear
  // after the subcommand name.
  app.set_config("--config", "", "read option defaults from an ini file ([subcommand] sections)");

  SolveOpts solve_opts;
  CLI::App* solve_cmd = app.add_subcommand("solve", "optimize one plan structure");
  solve_cmd->fallthrough();
  add_model_options(solve_cmd, solve_opts.p);
  solve_cmd->add_option("-v,--variant", solve_opts.variant, "plan structure")
      ->check(CLI::IsMember(std::vector<std::string>(kVariantNames.begin(), kVariantNames.end())))
      ->capture_default_str();
  solve_cmd->add_option("--plan-out", solve_opts.plan_out, "write the plan as JSON to this file");
  add_format_option(solve_cmd, solve_opts.format);

  SimulateOpts sim_opts;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "check a plan against Monte Carlo trials");
  sim_cmd->fallthrough();
  add_model_options(sim_cmd, sim_opts.p);
  sim_cmd->add_option("-v,--variant", sim_opts.variant, "solve this structure, then simulate")
      ->check(CLI::IsMember(std::vector<std::string>(kVariantNames.begin(), kVariantNames.end())));
  sim_cmd->add_option("--plan", sim_opts.plan_path, "simulate the plan in this JSON file");
  sim_cmd->add_option("-t,--trials", sim_opts.cfg.trials, "number of trials")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim_opts.cfg.seed, "RNG seed")->capture_default_str();
  sim_cmd->add_option("-m,--model", sim_opts.model, "failure model")
      ->check(CLI::IsMember({"linear", "exponential"}))
      ->capture_default_str();
  sim_cmd->add_option("--retry-cap", sim_opts.cfg.retry_cap,
                      "exponential model: max recovery attempts per chunk")
      ->capture_default_str();
  sim_cmd->add_option("--threads", sim_opts.cfg.threads, "worker threads (0 = all)")
      ->capture_default_str();
  add_format_option(sim_cmd, sim_opts.format);

  SweepOpts sweep_opts;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "tabulate all structures over a grid");
  sweep_cmd->fallthrough();
  sweep_cmd->add_option("-o,--out", sweep_opts.out_dir, "output directory")->required();
  sweep_cmd->add_option("--w-over-d", sweep_opts.grid.w_over_d, "work-to-deadline ratios");
  sweep_cmd->add_option("--tc-over-d", sweep_opts.grid.tc_over_d,
                        "checkpoint-time-to-deadline ratios");
  sweep_cmd->add_option("--ec", sweep_opts.grid.ec, "checkpoint energies");
  sweep_cmd->add_option("--lambda", sweep_opts.grid.lambda, "failure rates");
  sweep_cmd->add_option("--d", sweep_opts.grid.d, "deadline the ratios scale against")
      ->capture_default_str();
  sweep_cmd->add_option("--threads", sweep_opts.threads,
                        "worker threads (0 = all, default from CHKPT_ENERGY_THREADS)");
  add_format_option(sweep_cmd, sweep_opts.format);

  ProbeOpts probe_opts;
  CLI::App* probe_cmd =
      app.add_subcommand("probe", "search free per-chunk plans against the equal-chunk structure");
  probe_cmd->fallthrough();
  add_model_options(probe_cmd, probe_opts.p);
  probe_cmd->add_option("-n,--chunks", probe_opts.n, "chunk count")->capture_default_str();
  probe_cmd->add_option("-r,--restarts", probe_opts.restarts, "random restarts")
      ->capture_default_str();
  probe_cmd->add_option("--seed", probe_opts.seed, "RNG seed")->capture_default_str();
  add_format_option(probe_cmd, probe_opts.format);

  CompareOpts cmp_opts;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "optimize all eight structures side by side");
  cmp_cmd->fallthrough();
  add_model_options(cmp_cmd, cmp_opts.p);
  add_format_option(cmp_cmd, cmp_opts.format);

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (solve_cmd->parsed()) return do_solve(solve_opts, out);
    if (sim_cmd->parsed()) return do_simulate(sim_opts, out, err);
    if (sweep_cmd->parsed()) return do_sweep(sweep_opts, out);
    if (probe_cmd->parsed()) return do_probe(probe_opts, out);
    if (cmp_cmd->parsed()) return do_compare(cmp_opts, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << "error: no subcommand\n";
  return 1;
}

}  // namespace chkpt
