#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "multidecon/experiments.hpp"

using namespace mdc;

namespace {

// Hand-built grid skeleton for summary/CSV tests that need no compute.
PhaseGrid make_static_grid(const std::vector<Index>& l_values, const std::vector<Index>& k_values,
                           const std::vector<int>& successes, int trials = 25) {
  PhaseGrid grid;
  grid.spec.rows = {Dim::L, l_values};
  grid.spec.cols = {Dim::K, k_values};
  grid.spec.fixed = 4;  // N
  grid.spec.trials = trials;
  const Index cols = static_cast<Index>(k_values.size());
  for (Index r = 0; r < static_cast<Index>(l_values.size()); ++r)
    for (Index c = 0; c < cols; ++c) {
      CellStats cell;
      cell.cell_id = r * cols + c;
      cell.L = l_values[static_cast<std::size_t>(r)];
      cell.K = k_values[static_cast<std::size_t>(c)];
      cell.N = 4;
      cell.trials = trials;
      cell.successes = successes[static_cast<std::size_t>(cell.cell_id)];
      grid.cells.push_back(cell);
    }
  return grid;
}

std::size_t line_count(const std::string& path) {
  std::ifstream in(path);
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  return lines;
}

}  // namespace

TEST_CASE("scenario and dimension names round-trip") {
  CHECK(to_string(Scenario::gaussian) == "gaussian");
  CHECK(to_string(Scenario::identity_subset) == "identity_subset");
  CHECK(scenario_from_string("gaussian") == Scenario::gaussian);
  CHECK(scenario_from_string("identity_subset") == Scenario::identity_subset);
  CHECK_THROWS_AS(scenario_from_string("fourier"), std::invalid_argument);

  for (Dim dim : {Dim::L, Dim::K, Dim::N}) CHECK(dim_from_string(to_string(dim)) == dim);
  CHECK_THROWS_AS(dim_from_string("Q"), std::invalid_argument);
}

TEST_CASE("trial config validation names the offending field") {
  TrialConfig good;
  good.L = 16;
  good.K = 2;
  good.N = 3;
  CHECK_NOTHROW(validate(good));

  auto expect_mention = [](TrialConfig cfg, const std::string& field) {
    try {
      validate(cfg);
      FAIL("expected invalid_argument mentioning ", field);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  TrialConfig cfg = good;
  cfg.L = 0;
  expect_mention(cfg, "L");
  cfg = good;
  cfg.K = 0;
  expect_mention(cfg, "K");
  cfg = good;
  cfg.N = 0;
  expect_mention(cfg, "N");
  cfg = good;
  cfg.K = 32;  // exceeds L
  expect_mention(cfg, "K");
  cfg = good;
  cfg.sparsity = 17;
  expect_mention(cfg, "sparsity");
  cfg = good;
  cfg.threshold = 0.0;
  expect_mention(cfg, "threshold");
  cfg = good;
  cfg.solver.rank = 0;
  expect_mention(cfg, "rank");
}

TEST_CASE("trials deep inside and outside the feasible region resolve as expected") {
  // Generous oversampling: L = 20 K. Recovery should be essentially exact.
  TrialConfig deep;
  deep.L = 200;
  deep.K = 10;
  deep.N = 40;
  deep.seed = 41;
  const TrialRecord ok = run_trial(deep);
  CHECK(ok.success);
  CHECK(ok.error <= 1e-6);
  CHECK(ok.converged);
  CHECK(ok.iterations > 0);
  CHECK(ok.seconds > 0.0);
  CHECK(!ok.solver_error);
  CHECK(ok.sigma_ratio_h <= 1e-3);  // solution is numerically rank one

  // K = L/2: far past the transition; the solve lands away from the truth.
  TrialConfig shallow;
  shallow.L = 32;
  shallow.K = 16;
  shallow.N = 8;
  shallow.seed = 4207;
  const TrialRecord bad = run_trial(shallow);
  CHECK(!bad.success);
  CHECK(bad.error > 0.1);

  // Sparse-filter variant stays recoverable at generous oversampling.
  TrialConfig sparse;
  sparse.L = 64;
  sparse.K = 2;
  sparse.N = 8;
  sparse.sparsity = 4;
  sparse.seed = 555;
  const TrialRecord sp = run_trial(sparse);
  CHECK(sp.success);
  CHECK(sp.error <= 1e-6);
}

TEST_CASE("identical config and seed reproduce the record") {
  TrialConfig cfg;
  cfg.L = 64;
  cfg.K = 4;
  cfg.N = 6;
  cfg.seed = 90210;
  const TrialRecord a = run_trial(cfg);
  const TrialRecord b = run_trial(cfg);
  CHECK(a.seed == b.seed);
  CHECK(a.success == b.success);
  CHECK(a.error == b.error);  // bitwise: the whole pipeline is seeded
  CHECK(a.residual == b.residual);
  CHECK(a.sigma_ratio_h == b.sigma_ratio_h);
  CHECK(a.sigma_ratio_m == b.sigma_ratio_m);
  CHECK(a.iterations == b.iterations);
  CHECK(a.converged == b.converged);
}

TEST_CASE("solver exceptions are recorded as failed trials, not propagated") {
  TrialConfig cfg;
  cfg.L = 16;
  cfg.K = 2;
  cfg.N = 2;
  cfg.seed = 12;
  cfg.solver.rounds = 0;  // rejected inside the solver, after config validation
  TrialRecord rec;
  CHECK_NOTHROW(rec = run_trial(cfg));
  CHECK(rec.solver_error);
  CHECK(!rec.success);
  CHECK(rec.error == 1.0);
}

TEST_CASE("trial seeds are pure functions of master seed, cell, and trial") {
  CHECK(trial_seed(7, 3, 5) == trial_seed(7, 3, 5));
  CHECK(trial_seed(7, 3, 5) != trial_seed(7, 3, 6));
  CHECK(trial_seed(7, 3, 5) != trial_seed(7, 4, 5));
  CHECK(trial_seed(7, 3, 5) != trial_seed(8, 3, 5));
}

TEST_CASE("cell configs resolve the swept and fixed dimensions") {
  GridSpec spec;
  spec.rows = {Dim::K, {2, 4, 8}};
  spec.cols = {Dim::N, {5, 10}};
  spec.fixed = 128;  // L is the leftover dimension
  spec.scenario = Scenario::identity_subset;
  spec.sparsity = 3;
  spec.seed = 31;
  CHECK(fixed_dim(spec) == Dim::L);

  const TrialConfig cfg = cell_config(spec, 2, 1, 7);
  CHECK(cfg.L == 128);
  CHECK(cfg.K == 8);
  CHECK(cfg.N == 10);
  CHECK(cfg.scenario == Scenario::identity_subset);
  CHECK(cfg.sparsity == 3);
  CHECK(cfg.seed == trial_seed(31, 2 * 2 + 1, 7));
  CHECK_THROWS_AS(cell_config(spec, 3, 0, 0), std::out_of_range);

  GridSpec ln;
  ln.rows = {Dim::L, {16}};
  ln.cols = {Dim::N, {2}};
  ln.fixed = 4;
  CHECK(fixed_dim(ln) == Dim::K);
  GridSpec lk;
  lk.rows = {Dim::L, {16}};
  lk.cols = {Dim::K, {2}};
  lk.fixed = 4;
  CHECK(fixed_dim(lk) == Dim::N);
}

TEST_CASE("grid validation rejects malformed sweeps") {
  GridSpec good;
  good.rows = {Dim::L, {16, 32}};
  good.cols = {Dim::K, {2}};
  good.fixed = 4;
  CHECK_NOTHROW(validate(good));

  GridSpec spec = good;
  spec.cols.dim = Dim::L;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = good;
  spec.rows.values.clear();
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = good;
  spec.cols.values = {0};
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = good;
  spec.fixed = 0;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = good;
  spec.trials = 0;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = good;
  spec.cols.values = {64};  // a cell with K > L = 16
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = good;
  spec.sparsity = 20;  // exceeds the smallest swept L
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}

TEST_CASE("transition grids agree across scenarios and sweep monotonically") {
  // 2x2 sweep straddling the transition: K = 2 is ~16x oversampled (solid
  // success), K = 16 at L = 32 is K = L/2 (solid failure); (64, 16) sits in
  // the transition band.  Counts are deterministic given the master seed.
  const auto run = [](Scenario scenario) {
    GridSpec spec;
    spec.rows = {Dim::L, {32, 64}};
    spec.cols = {Dim::K, {2, 16}};
    spec.fixed = 8;  // N
    spec.scenario = scenario;
    spec.seed = 2026;
    spec.threads = 2;  // exercise the pool; results are schedule-independent
    return phase_grid(spec);
  };
  const PhaseGrid gauss = run(Scenario::gaussian);
  const PhaseGrid ident = run(Scenario::identity_subset);

  for (const PhaseGrid* grid : {&gauss, &ident}) {
    REQUIRE(grid->cells.size() == 4);
    for (const CellStats& cell : grid->cells) {
      CHECK(cell.trials == 25);
      CHECK(cell.successes <= cell.trials);
      CHECK(cell.mean_seconds > 0.0);
    }
    CHECK(grid->total_seconds > 0.0);

    // Deep success and deep failure cells.
    CHECK(grid->rate(0, 0) == 1.0);
    CHECK(grid->rate(1, 0) == 1.0);
    CHECK(grid->rate(0, 1) <= 0.08);

    // Success is monotone: worse with K, better with L.
    CHECK(grid->rate(0, 0) >= grid->rate(0, 1));
    CHECK(grid->rate(1, 0) >= grid->rate(1, 1));
    CHECK(grid->rate(1, 0) >= grid->rate(0, 0));
    CHECK(grid->rate(1, 1) >= grid->rate(0, 1));
  }

  // Scenario parity: per-cell rates agree within 0.2.
  for (Index r = 0; r < 2; ++r)
    for (Index c = 0; c < 2; ++c)
      CHECK(std::abs(gauss.rate(r, c) - ident.rate(r, c)) <= 0.2);

  // Boundary estimate: K = 2 crosses 1/2 at the smallest L; K = 16 only at 64.
  const GridSummary summary = summarize(gauss);
  REQUIRE(summary.boundary.size() == 2);
  CHECK(summary.boundary[0].axis_value == 2);
  CHECK(summary.boundary[0].defined);
  CHECK(summary.boundary[0].smallest_L == 32);
  CHECK(summary.boundary[1].axis_value == 16);
  CHECK(summary.boundary[1].defined);
  CHECK(summary.boundary[1].smallest_L == 64);

  // CSV round trip of the same grid.
  std::ostringstream csv;
  write_grid_csv(gauss, csv);
  std::istringstream lines(csv.str());
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "cell_id,L,K,N,scenario,trials,successes,mean_error,mean_seconds");
  REQUIRE(std::getline(lines, line));
  CHECK(line.rfind("0,32,2,8,gaussian,25,25,", 0) == 0);
  int rows = 1;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("grid reruns with the same master seed are identical") {
  GridSpec spec;
  spec.rows = {Dim::L, {32}};
  spec.cols = {Dim::K, {2, 4}};
  spec.fixed = 8;
  spec.trials = 10;
  spec.seed = 77;
  spec.threads = 1;
  const PhaseGrid a = phase_grid(spec);
  spec.threads = 2;
  const PhaseGrid b = phase_grid(spec);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].successes == b.cells[i].successes);
    CHECK(a.cells[i].mean_error == b.cells[i].mean_error);  // bitwise
  }
}

TEST_CASE("checkpointed grids resume after interruption") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "mdc_exp_ckpt.ndjson").string();
  fs::remove(path);

  GridSpec spec;
  spec.rows = {Dim::L, {32}};
  spec.cols = {Dim::K, {2, 16}};
  spec.fixed = 8;
  spec.trials = 6;
  spec.seed = 99;
  spec.threads = 1;
  spec.checkpoint = path;

  const PhaseGrid full = phase_grid(spec);
  CHECK(line_count(path) == 12);

  // Simulate an interrupt: keep only the first five finished trials.
  {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line) && lines.size() < 5) lines.push_back(line);
    in.close();
    std::ofstream out(path, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
  }
  // A partial checkpoint aggregates read-only: five records all land in the
  // first cell (single-threaded dispatch runs cells in order).
  const PhaseGrid partial = load_grid(spec);
  CHECK(partial.cells[0].trials == 5);
  CHECK(partial.cells[1].trials == 0);
  CHECK(partial.cells[0].successes <= 5);
  CHECK_NOTHROW(summarize(partial));

  const PhaseGrid resumed = phase_grid(spec, /*resume=*/true);
  CHECK(line_count(path) == 12);
  REQUIRE(resumed.cells.size() == full.cells.size());
  for (std::size_t i = 0; i < full.cells.size(); ++i) {
    CHECK(resumed.cells[i].successes == full.cells[i].successes);
    CHECK(resumed.cells[i].mean_error == full.cells[i].mean_error);
  }

  // Stale or garbage lines are ignored, and a complete checkpoint re-runs
  // nothing (counts unchanged, no appended duplicates).
  {
    std::ofstream out(path, std::ios::app);
    out << "not json at all\n";
    out << "{\"cell_id\":0,\"trial\":0,\"seed\":123,\"success\":true}\n";  // wrong seed
    out << "{\"cell_id\":99,\"trial\":0,\"seed\":1}\n";                    // out of range
  }
  const PhaseGrid again = phase_grid(spec, /*resume=*/true);
  for (std::size_t i = 0; i < full.cells.size(); ++i)
    CHECK(again.cells[i].successes == full.cells[i].successes);

  // Without resume the checkpoint restarts from scratch.
  const PhaseGrid fresh = phase_grid(spec, /*resume=*/false);
  CHECK(line_count(path) == 12);
  for (std::size_t i = 0; i < full.cells.size(); ++i)
    CHECK(fresh.cells[i].mean_error == full.cells[i].mean_error);
  fs::remove(path);
}

TEST_CASE("summaries expose per-column boundaries") {
  // K = 2 column crosses 1/2 at L = 32; K = 4 column never does.
  const PhaseGrid grid =
      make_static_grid({16, 32, 64}, {2, 4}, {5, 0, 20, 0, 25, 0});
  const GridSummary summary = summarize(grid);
  REQUIRE(summary.boundary.size() == 2);
  CHECK(summary.boundary[0].defined);
  CHECK(summary.boundary[0].smallest_L == 32);
  CHECK(!summary.boundary[1].defined);

  // All-success grid: the boundary is the smallest swept L everywhere.
  const PhaseGrid easy = make_static_grid({16, 32}, {2, 4}, {25, 25, 25, 25});
  for (const auto& b : summarize(easy).boundary) {
    CHECK(b.defined);
    CHECK(b.smallest_L == 16);
  }

  // No L sweep: no boundary to estimate.
  PhaseGrid kn = make_static_grid({16}, {2}, {25});
  kn.spec.rows = {Dim::K, {16}};
  kn.spec.cols = {Dim::N, {2}};
  CHECK(summarize(kn).boundary.empty());

  PhaseGrid empty;
  CHECK_THROWS_AS(summarize(empty), std::invalid_argument);
}

TEST_CASE("csv output pins the documented schema") {
  PhaseGrid grid = make_static_grid({100}, {5}, {24});
  grid.cells[0].N = 40;
  grid.cells[0].mean_error = 0.0625;
  grid.cells[0].mean_seconds = 1.5;
  std::ostringstream out;
  write_grid_csv(grid, out);
  CHECK(out.str() ==
        "cell_id,L,K,N,scenario,trials,successes,mean_error,mean_seconds\n"
        "0,100,5,40,gaussian,25,24,0.0625,1.5\n");

  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "mdc_exp_grid.csv").string();
  write_grid_csv(grid, path);
  std::ifstream in(path);
  std::stringstream readback;
  readback << in.rdbuf();
  CHECK(readback.str() == out.str());
  fs::remove(path);

  CHECK_THROWS_AS(write_grid_csv(grid, "/nonexistent_dir_mdc/grid.csv"), std::runtime_error);
}
