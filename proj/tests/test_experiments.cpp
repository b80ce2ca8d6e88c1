#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "chkpt/experiments.hpp"
#include "test_util.hpp"

using namespace chkpt;

namespace {

SweepGrid mini_grid() {
  SweepGrid g;
  g.w_over_d = {1.0, 2.0};
  g.tc_over_d = {0.01};
  g.ec = {0.1};
  g.lambda = {0.1, 0.2, 0.5};
  return g;
}

const SweepRow* find_row(const std::vector<SweepRow>& rows, double w, double ec, double la) {
  for (const SweepRow& r : rows)
    if (r.w_over_d == w && r.ec == ec && r.lambda == la) return &r;
  return nullptr;
}

}  // namespace

TEST_CASE("variant tags round-trip through the index mapping") {
  for (int i = 0; i < 8; ++i)
    CHECK(variant_name(variant_by_index(i)) == kVariantNames[i]);
  CHECK_THROWS_AS(variant_by_index(8), std::invalid_argument);
  CHECK_THROWS_AS(variant_by_index(-1), std::invalid_argument);
}

TEST_CASE("default grid spans the study ranges") {
  const SweepGrid g = SweepGrid::defaults();
  CHECK(g.w_over_d.size() == 4);
  CHECK(g.tc_over_d.size() == 3);
  CHECK(g.ec.size() == 5);
  CHECK(g.lambda.size() == 13);
  CHECK(g.lambda.front() == doctest::Approx(1e-8).epsilon(1e-12));
  CHECK(g.lambda.back() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.d == 1.0);
  CHECK_NOTHROW(g.validate());

  SweepGrid bad = g;
  bad.ec.push_back(-1.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = g;
  bad.lambda.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("rows come out in loop order and are thread-count independent") {
  const SweepGrid g = mini_grid();
  const auto rows1 = run_sweep(g, SolverConfig{}, 1);
  const auto rows3 = run_sweep(g, SolverConfig{}, 3);
  REQUIRE(rows1.size() == 6);
  int k = 0;
  for (double w : g.w_over_d)
    for (double la : g.lambda) {
      CHECK(rows1[k].w_over_d == w);
      CHECK(rows1[k].lambda == la);
      ++k;
    }
  REQUIRE(rows3.size() == rows1.size());
  for (std::size_t i = 0; i < rows1.size(); ++i)
    for (int v = 0; v < 8; ++v) {
      CHECK(rows1[i].cells[v].status == rows3[i].cells[v].status);
      CHECK(rows1[i].cells[v].energy == rows3[i].cells[v].energy);
      CHECK(rows1[i].cells[v].n == rows3[i].cells[v].n);
    }
}

TEST_CASE("csv round-trips rows exactly") {
  const auto rows = run_sweep(mini_grid(), SolverConfig{}, 1);
  const std::string csv = sweep_csv(rows);
  std::istringstream in(csv);
  const auto back = parse_sweep_csv(in);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].w_over_d == rows[i].w_over_d);
    CHECK(back[i].tc_over_d == rows[i].tc_over_d);
    CHECK(back[i].ec == rows[i].ec);
    CHECK(back[i].lambda == rows[i].lambda);
    for (int v = 0; v < 8; ++v) {
      CHECK(back[i].cells[v].status == rows[i].cells[v].status);
      if (rows[i].cells[v].status == SolveStatus::Optimal)
        CHECK(back[i].cells[v].energy == rows[i].cells[v].energy);
    }
    for (int v : {2, 3, 6, 7})
      CHECK(back[i].cells[v].n == rows[i].cells[v].n);
  }
  std::istringstream junk("not,a,header\n1,2,3\n");
  CHECK_THROWS_AS(parse_sweep_csv(junk), std::invalid_argument);
}

TEST_CASE("infeasible cells carry the sentinel token") {
  SweepGrid g;
  g.w_over_d = {1.0};
  g.tc_over_d = {0.6};  // 2*tc >= D kills the hard-deadline variants
  g.ec = {0.1};
  g.lambda = {0.1};
  const auto rows = run_sweep(g, SolverConfig{}, 1);
  REQUIRE(rows.size() == 1);
  for (int v = 0; v < 4; ++v) CHECK(rows[0].cells[v].status == SolveStatus::Optimal);
  for (int v = 4; v < 8; ++v) CHECK(rows[0].cells[v].status == SolveStatus::Infeasible);

  const std::string csv = sweep_csv(rows);
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  int tokens = 0;
  std::istringstream fields(line);
  std::string f;
  while (std::getline(fields, f, ',')) tokens += (f == "INFEASIBLE") ? 1 : 0;
  // 4 energy cells, 4 ratios against the hard-deadline baseline, 4 ED/HD ratios
  CHECK(tokens == 12);

  std::istringstream back_in(csv);
  const auto back = parse_sweep_csv(back_in);
  for (int v = 4; v < 8; ++v) CHECK(back[0].cells[v].status == SolveStatus::Infeasible);
}

TEST_CASE("emitted outputs are a csv plus lintable plot scripts") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chkpt_sweep_test";
  fs::remove_all(dir);
  const auto rows = run_sweep(mini_grid(), SolverConfig{}, 1);
  emit_outputs(rows, dir);

  std::ifstream csv_file(dir / "sweep.csv");
  REQUIRE(csv_file.good());
  std::stringstream csv;
  csv << csv_file.rdbuf();
  CHECK(csv.str() == sweep_csv(rows));

  std::string header = csv.str().substr(0, csv.str().find('\n'));
  std::set<std::string> columns;
  std::istringstream hs(header);
  std::string col;
  while (std::getline(hs, col, ',')) columns.insert(col);
  REQUIRE(columns.size() == 28);

  for (const char* script : {"ratio_vs_scss.gp", "ed_over_hd.gp"}) {
    std::ifstream gp_file(dir / "plots" / script);
    REQUIRE(gp_file.good());
    std::stringstream gp;
    gp << gp_file.rdbuf();
    const std::string text = gp.str();
    CHECK(text.find("set datafile missing \"INFEASIBLE\"") != std::string::npos);
    CHECK(text.find("../sweep.csv") != std::string::npos);
    // Every column("...") reference must name a real csv column.
    std::size_t pos = 0;
    int refs = 0;
    while ((pos = text.find("column(\"", pos)) != std::string::npos) {
      pos += 8;
      const std::size_t end = text.find('"', pos);
      REQUIRE(end != std::string::npos);
      const std::string name = text.substr(pos, end - pos);
      CHECK(columns.count(name) == 1);
      ++refs;
    }
    CHECK(refs > 0);
  }
  fs::remove_all(dir);
}

TEST_CASE("rare-failure regime reproduces the headline ratio thresholds") {
  SweepGrid g;
  g.w_over_d = {1.0};
  g.tc_over_d = {1e-4};
  g.ec = {1e-3};
  g.lambda = {1e-8};
  const auto rows = run_sweep(g, SolverConfig{}, 1);
  REQUIRE(rows.size() == 1);
  const auto& c = rows[0].cells;
  for (int v = 0; v < 8; ++v) REQUIRE(c[v].status == SolveStatus::Optimal);
  const double scms_vs_scss_hd = c[5].energy / c[4].energy;
  CHECK(scms_vs_scss_hd <= 0.30);  // a free recovery speed saves most of the margin
  CHECK(c[2].energy / c[0].energy >= 0.99);  // chunking alone buys nothing here
  CHECK(c[3].energy / c[0].energy >= 0.99);
  const double scms_ed_over_hd = c[1].energy / c[5].energy;
  CHECK(scms_ed_over_hd >= 0.99);
  CHECK(scms_ed_over_hd <= 1.001);
}

TEST_CASE("ratios are invariant under the cubic checkpoint-energy translation") {
  // Scaling work by alpha with energies scaled by alpha^3 leaves every
  // dimensionless ratio unchanged; (1, 1e-3) -> (10, 1) realizes it exactly.
  SweepGrid g;
  g.w_over_d = {1.0, 10.0};
  g.tc_over_d = {1e-3};
  g.ec = {1e-3, 1.0};
  g.lambda = {1e-8, 1e-6, 1e-4, 1e-2, 1.0};
  const auto rows = run_sweep(g, SolverConfig{}, 1);
  const double alpha3 = 1000.0;
  for (double la : g.lambda) {
    const SweepRow* base = find_row(rows, 1.0, 1e-3, la);
    const SweepRow* scaled = find_row(rows, 10.0, 1.0, la);
    REQUIRE(base != nullptr);
    REQUIRE(scaled != nullptr);
    for (int v = 0; v < 8; ++v) {
      REQUIRE(base->cells[v].status == SolveStatus::Optimal);
      REQUIRE(scaled->cells[v].status == SolveStatus::Optimal);
      CHECK(scaled->cells[v].energy ==
            doctest::Approx(base->cells[v].energy * alpha3).epsilon(1e-9));
      CHECK(scaled->cells[v].n == base->cells[v].n);
    }
    for (int v = 1; v < 8; ++v) {
      const double rb = base->cells[v].energy / base->cells[0].energy;
      const double rs = scaled->cells[v].energy / scaled->cells[0].energy;
      CHECK(rs == doctest::Approx(rb).epsilon(1e-3));
    }
  }
}

TEST_CASE("free-structure probe cannot beat the equal-chunk plan") {
  ModelParams p{1.0, 1.0, 0.01, 0.1, 0.3};
  for (long n : {2L, 4L}) {
    const ProbeReport rep = conjecture_probe(p, n, 3, 42);
    CHECK(rep.n == n);
    CHECK(rep.structured_energy > 0.0);
    CHECK(rep.improvement_rel <= 1e-6);
    CHECK(rep.weight_spread_rel <= 1e-3);
    REQUIRE(rep.free_plan.chunks.size() == static_cast<std::size_t>(n));
    double total = 0.0;
    for (const Chunk& c : rep.free_plan.chunks) {
      CHECK(c.w > 0.0);
      CHECK(c.s > 0.0);
      CHECK(c.sigma > 0.0);
      total += c.w;
    }
    CHECK(total == doctest::Approx(p.W).epsilon(1e-12));
    CHECK(worst_time(p, rep.free_plan) == doctest::Approx(p.D).epsilon(1e-9));
    CHECK(rep.restarts.size() == 3);
    for (const RestartReport& r : rep.restarts) CHECK(r.converged);
  }
  CHECK_THROWS_AS(conjecture_probe(p, 1, 3, 42), std::invalid_argument);
  ModelParams nofail = p;
  nofail.lambda = 0.0;
  CHECK_THROWS_AS(conjecture_probe(nofail, 2, 3, 42), std::invalid_argument);
}

TEST_CASE("probe is reproducible for a fixed seed") {
  ModelParams p{1.0, 1.0, 0.005, 0.05, 0.2};
  const ProbeReport a = conjecture_probe(p, 3, 4, 7);
  const ProbeReport b = conjecture_probe(p, 3, 4, 7);
  CHECK(a.free_energy == b.free_energy);
  for (std::size_t i = 0; i < a.restarts.size(); ++i)
    CHECK(a.restarts[i].energy == b.restarts[i].energy);
}
