#include "chkpt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "chkpt/format.hpp"

namespace chkpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr const char* kCsvHeader =
    "w_over_d,tc_over_d,ec,lambda,"
    "scss_ed,scms_ed,mcss_ed,mcms_ed,scss_hd,scms_hd,mcss_hd,mcms_hd,"
    "n_mcss_ed,n_mcms_ed,n_mcss_hd,n_mcms_hd,"
    "r_scss_ed,r_scms_ed,r_mcss_ed,r_mcms_ed,"
    "r_scss_hd,r_scms_hd,r_mcss_hd,r_mcms_hd,"
    "edhd_scss,edhd_scms,edhd_mcss,edhd_mcms";

constexpr const char* kInfeasibleToken = "INFEASIBLE";

}  // namespace

VariantSpec variant_by_index(int i) {
  if (i < 0 || i > 7) throw std::invalid_argument("variant index out of range");
  VariantSpec v;
  v.deadline = (i < 4) ? DeadlineMode::Expected : DeadlineMode::Hard;
  v.chunks = ((i % 4) < 2) ? ChunkMode::Single : ChunkMode::Multi;
  v.speeds = ((i % 2) == 0) ? SpeedMode::Single : SpeedMode::Multi;
  return v;
}

SweepGrid SweepGrid::defaults() {
  SweepGrid g;
  g.w_over_d = {0.2, 1.0, 5.0, 10.0};
  g.tc_over_d = {1e-4, 1e-3, 1e-2};
  g.ec = {1e-3, 0.1, 1.0, 10.0, 1e3};
  for (int k = 0; k <= 12; ++k) g.lambda.push_back(std::pow(10.0, -8.0 + 8.0 * k / 12.0));
  return g;
}

void SweepGrid::validate() const {
  auto positive = [](const std::vector<double>& xs, const char* what) {
    if (xs.empty()) throw std::invalid_argument(std::string(what) + " list must not be empty");
    for (double x : xs)
      if (!(std::isfinite(x) && x > 0.0))
        throw std::invalid_argument(std::string(what) + " values must be positive");
  };
  positive(w_over_d, "w_over_d");
  positive(tc_over_d, "tc_over_d");
  positive(ec, "ec");
  positive(lambda, "lambda");
  if (!(std::isfinite(d) && d > 0.0)) throw std::invalid_argument("d must be positive");
}

std::vector<SweepRow> run_sweep(const SweepGrid& grid, const SolverConfig& cfg, int threads) {
  grid.validate();
  std::vector<SweepRow> rows;
  for (double w : grid.w_over_d)
    for (double tc : grid.tc_over_d)
      for (double ec : grid.ec)
        for (double la : grid.lambda) {
          SweepRow r;
          r.w_over_d = w;
          r.tc_over_d = tc;
          r.ec = ec;
          r.lambda = la;
          rows.push_back(r);
        }

  auto fill = [&](SweepRow& r) {
    ModelParams p{r.w_over_d * grid.d, grid.d, r.tc_over_d * grid.d, r.ec, r.lambda};
    for (int i = 0; i < 8; ++i) {
      const SolveOutcome out = solve_variant(p, variant_by_index(i), cfg);
      VariantCell& cell = r.cells[i];
      cell.status = out.status;
      cell.n = out.n;
      cell.energy = out.plan ? out.eval.expected_energy : 0.0;
    }
  };

  int workers = threads;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp<int>(workers, 1, static_cast<int>(rows.size()));
  if (workers == 1) {
    for (SweepRow& r : rows) fill(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1))
          fill(rows[i]);
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

namespace {

bool solved(const VariantCell& c) { return c.status == SolveStatus::Optimal; }

std::string ratio_or_token(const VariantCell& num, const VariantCell& den) {
  if (!solved(num) || !solved(den)) return kInfeasibleToken;
  return fmt_shortest(num.energy / den.energy);
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const SweepRow& r : rows) {
    out += fmt_shortest(r.w_over_d);
    out += ',';
    out += fmt_shortest(r.tc_over_d);
    out += ',';
    out += fmt_shortest(r.ec);
    out += ',';
    out += fmt_shortest(r.lambda);
    for (const VariantCell& c : r.cells) {
      out += ',';
      out += (c.status == SolveStatus::Infeasible) ? kInfeasibleToken : fmt_shortest(c.energy);
    }
    for (int i : {2, 3, 6, 7}) {  // chunk counts for the multi-chunk variants
      out += ',';
      out += std::to_string(r.cells[i].n);
    }
    for (int i = 0; i < 8; ++i) {  // baseline: scss under the same deadline mode
      out += ',';
      out += ratio_or_token(r.cells[i], r.cells[(i < 4) ? 0 : 4]);
    }
    for (int i = 0; i < 4; ++i) {  // expected over hard, per structure
      out += ',';
      out += ratio_or_token(r.cells[i], r.cells[i + 4]);
    }
    out += '\n';
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty sweep csv");
  if (line == std::string(kCsvHeader) + "\r") line.pop_back();
  if (line != kCsvHeader) throw std::invalid_argument("unexpected sweep csv header");

  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 28)
      throw std::invalid_argument("sweep csv row has " + std::to_string(fields.size()) +
                                  " fields, expected 28");
    SweepRow r;
    r.w_over_d = parse_double(fields[0]);
    r.tc_over_d = parse_double(fields[1]);
    r.ec = parse_double(fields[2]);
    r.lambda = parse_double(fields[3]);
    for (int i = 0; i < 8; ++i) {
      VariantCell& c = r.cells[i];
      if (fields[4 + i] == kInfeasibleToken) {
        c.status = SolveStatus::Infeasible;
      } else {
        c.status = SolveStatus::Optimal;
        c.energy = parse_double(fields[4 + i]);
        c.n = 1;
      }
    }
    const int mc[4] = {2, 3, 6, 7};
    for (int j = 0; j < 4; ++j) {
      const long n = static_cast<long>(parse_double(fields[12 + j]));
      if (r.cells[mc[j]].status == SolveStatus::Optimal) r.cells[mc[j]].n = n;
    }
    rows.push_back(r);
  }
  return rows;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

// One gnuplot panel per ratio column; within a panel, one point series per
// (w_over_d, ec) pair so the spread over tc_over_d shows as vertical bands.
std::string plot_script(const std::string& png, const std::string& ylabel,
                        const std::vector<const char*>& cols,
                        const std::vector<std::pair<double, double>>& combos,
                        int layout_rows, int layout_cols) {
  std::string s;
  s += "# Generated alongside sweep.csv; run gnuplot from this directory.\n";
  s += "set datafile separator \",\"\n";
  s += "set datafile missing \"" + std::string(kInfeasibleToken) + "\"\n";
  s += "datafile = \"../sweep.csv\"\n";
  s += "set terminal pngcairo size 1800,1000\n";
  s += "set output \"" + png + "\"\n";
  s += "set logscale x\n";
  s += "set xlabel \"failure rate\"\n";
  s += "set ylabel \"" + ylabel + "\"\n";
  s += "set key outside right\n";
  s += "set multiplot layout " + std::to_string(layout_rows) + "," +
       std::to_string(layout_cols) + "\n";
  for (const char* col : cols) {
    s += "set title \"" + std::string(col) + "\"\n";
    s += "plot \\\n";
    for (std::size_t i = 0; i < combos.size(); ++i) {
      const std::string w = fmt_shortest(combos[i].first);
      const std::string ec = fmt_shortest(combos[i].second);
      s += "  datafile using (column(\"lambda\")):(column(\"w_over_d\")==" + w +
           " && column(\"ec\")==" + ec + " ? column(\"" + col + "\") : 1/0)" +
           " title \"W/D=" + w + " Ec=" + ec + "\" with points pt 7 ps 0.5";
      s += (i + 1 < combos.size()) ? ", \\\n" : "\n";
    }
  }
  s += "unset multiplot\n";
  return s;
}

}  // namespace

void emit_outputs(const std::vector<SweepRow>& rows, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "plots");
  write_file(dir / "sweep.csv", sweep_csv(rows));

  std::set<std::pair<double, double>> combo_set;
  for (const SweepRow& r : rows) combo_set.insert({r.w_over_d, r.ec});
  const std::vector<std::pair<double, double>> combos(combo_set.begin(), combo_set.end());

  write_file(dir / "plots" / "ratio_vs_scss.gp",
             plot_script("ratio_vs_scss.png", "energy relative to scss",
                         {"r_scms_ed", "r_mcss_ed", "r_mcms_ed",
                          "r_scms_hd", "r_mcss_hd", "r_mcms_hd"},
                         combos, 2, 3));
  write_file(dir / "plots" / "ed_over_hd.gp",
             plot_script("ed_over_hd.png", "expected-deadline over hard-deadline energy",
                         {"edhd_scss", "edhd_scms", "edhd_mcss", "edhd_mcms"},
                         combos, 2, 2));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct ProbeRng {
  std::uint64_t state;
  double u01() {
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  }
};

// Free-structure energy with the recovery speeds eliminated: for fixed sizes
// and first-execution speeds, sigma_i = S / (R u_i^{1/3}) is optimal, where
// u_i = lambda (w_i/s_i + tc), S = sum w_i u_i^{1/3}, and R is the deadline
// slack left for recoveries. That collapses the recovery-energy sum to S^3/R^2.
struct FreeObjective {
  const ModelParams& p;
  long n;

  double operator()(const std::vector<double>& w, const std::vector<double>& s) const {
    double sum_t = 0.0, sum_ws2 = 0.0;
    for (long i = 0; i < n; ++i) {
      if (!(w[i] > 0.0) || !(s[i] > 0.0)) return kInf;
      sum_t += w[i] / s[i];
      sum_ws2 += w[i] * s[i] * s[i];
    }
    const double R = p.D - 2.0 * n * p.tc - sum_t;
    if (!(R > 0.0)) return kInf;
    double S = 0.0, sum_u = 0.0;
    for (long i = 0; i < n; ++i) {
      const double u = p.lambda * (w[i] / s[i] + p.tc);
      S += w[i] * std::cbrt(u);
      sum_u += u;
    }
    return sum_ws2 + n * p.ec + p.ec * sum_u + S * S * S / (R * R);
  }

  void sigmas(const std::vector<double>& w, const std::vector<double>& s,
              std::vector<double>& sigma) const {
    double sum_t = 0.0, S = 0.0;
    for (long i = 0; i < n; ++i) sum_t += w[i] / s[i];
    const double R = p.D - 2.0 * n * p.tc - sum_t;
    for (long i = 0; i < n; ++i) S += w[i] * std::cbrt(p.lambda * (w[i] / s[i] + p.tc));
    sigma.resize(n);
    for (long i = 0; i < n; ++i)
      sigma[i] = S / (R * std::cbrt(p.lambda * (w[i] / s[i] + p.tc)));
  }
};

// Scan plus golden section on a closed interval; tolerant of flat regions.
template <typename F>
double bounded_min(F&& f, double a, double b, double rel_tol) {
  constexpr int kScan = 32;
  double best_x = a, best_f = kInf;
  for (int j = 0; j <= kScan; ++j) {
    const double x = a + (b - a) * j / kScan;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  double lo = std::max(a, best_x - (b - a) / kScan);
  double hi = std::min(b, best_x + (b - a) / kScan);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200; ++it) {
    if (hi - lo <= rel_tol * (std::abs(lo) + std::abs(hi) + 1.0)) break;
    if (f1 <= f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double mid = 0.5 * (lo + hi);
  return (f(mid) <= best_f) ? mid : best_x;
}

}  // namespace

ProbeReport conjecture_probe(const ModelParams& p, long n, int restarts,
                             std::uint64_t seed, const SolverConfig& cfg) {
  p.validate();
  if (n < 2) throw std::invalid_argument("probe needs at least 2 chunks");
  if (restarts < 1) throw std::invalid_argument("probe needs at least 1 restart");
  if (!(p.lambda > 0.0)) throw std::invalid_argument("probe needs lambda > 0");

  const SolveOutcome structured = solve_mc_fixed(p, n, SpeedMode::Multi, DeadlineMode::Hard, cfg);
  if (!structured.plan)
    throw std::invalid_argument("instance infeasible for " + std::to_string(n) + " chunks: " +
                                structured.reason);
  const double s_struct = structured.plan->chunks[0].s;

  ProbeReport rep;
  rep.n = n;
  rep.structured_plan = *structured.plan;
  rep.structured_energy = structured.eval.expected_energy;

  const FreeObjective obj{p, n};
  ProbeRng rng{splitmix64(seed)};

  std::vector<double> best_w, best_s;
  double best_f = kInf;

  for (int r = 0; r < restarts; ++r) {
    std::vector<double> w(n, p.W / n), s(n, s_struct);
    if (r > 0) {
      // Random feasible perturbation of the structured point.
      for (int attempt = 0; attempt < 200; ++attempt) {
        double total = 0.0;
        for (long i = 0; i < n; ++i) {
          w[i] = std::exp(0.8 * (2.0 * rng.u01() - 1.0));
          total += w[i];
        }
        for (long i = 0; i < n; ++i) w[i] *= p.W / total;
        for (long i = 0; i < n; ++i) s[i] = s_struct * std::exp(0.5 * (2.0 * rng.u01() - 1.0));
        if (std::isfinite(obj(w, s))) break;
        for (long i = 0; i < n; ++i) { w[i] = p.W / n; s[i] = s_struct; }
      }
    }

    double cur = obj(w, s);
    RestartReport rr;
    const int max_sweeps = 300;
    for (rr.sweeps = 0; rr.sweeps < max_sweeps; ++rr.sweeps) {
      const double before = cur;
      for (long i = 0; i < n; ++i) {
        const double si = s[i];
        auto slice = [&](double x) {
          s[i] = x;
          const double v = obj(w, s);
          s[i] = si;
          return v;
        };
        MinimizeResult m = minimize_unimodal(slice, 0.0, si, cfg);
        if (std::isfinite(m.fx) && m.fx < cur) {
          s[i] = m.x;
          cur = m.fx;
        }
      }
      for (long i = 0; i + 1 < n; ++i) {
        const double wi = w[i], wl = w[n - 1];
        auto slice = [&](double delta) {
          w[i] = wi + delta;
          w[n - 1] = wl - delta;
          const double v = obj(w, s);
          w[i] = wi;
          w[n - 1] = wl;
          return v;
        };
        const double margin = 1e-9 * p.W;
        const double delta = bounded_min(slice, -wi + margin, wl - margin, cfg.rel_tol);
        const double moved = slice(delta);
        if (moved < cur) {
          w[i] = wi + delta;
          w[n - 1] = wl - delta;
          cur = moved;
        }
      }
      // Pin the size sum so rounding drift cannot accumulate.
      double partial = 0.0;
      for (long i = 0; i + 1 < n; ++i) partial += w[i];
      w[n - 1] = p.W - partial;
      cur = obj(w, s);
      if (before - cur <= 1e-13 * std::max(std::abs(cur), 1.0)) {
        rr.converged = true;
        ++rr.sweeps;
        break;
      }
    }
    rr.energy = cur;
    rep.restarts.push_back(rr);
    if (cur < best_f) {
      best_f = cur;
      best_w = w;
      best_s = s;
    }
  }

  std::vector<double> sigma;
  obj.sigmas(best_w, best_s, sigma);
  rep.free_plan.chunks.clear();
  for (long i = 0; i < n; ++i)
    rep.free_plan.chunks.push_back(Chunk{best_w[i], best_s[i], sigma[i]});
  rep.free_energy = evaluate(p, rep.free_plan).expected_energy;
  rep.improvement_rel = (rep.structured_energy - rep.free_energy) / rep.structured_energy;

  rep.weights.resize(n);
  double wmax = -kInf, wmin = kInf;
  for (long i = 0; i < n; ++i) {
    const double u = p.lambda * (best_w[i] / best_s[i] + p.tc);
    rep.weights[i] = u * sigma[i] * sigma[i] * sigma[i];
    wmax = std::max(wmax, rep.weights[i]);
    wmin = std::min(wmin, rep.weights[i]);
  }
  rep.weight_spread_rel = (wmax > 0.0) ? (wmax - wmin) / wmax : 0.0;
  return rep;
}

}  // namespace chkpt
