#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "multidecon/solver.hpp"
#include "multidecon/types.hpp"

namespace mdc {

// Input-side coding model for an end-to-end recovery experiment: either each
// input lives in a random Gaussian subspace, or on a random subset of the
// standard coordinates (sparse inputs with known support).
enum class Scenario { gaussian, identity_subset };

std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);  // throws on unknown names

// One planted-instance experiment.  The filter is dense Gaussian by default
// (sparsity = 0) or S-sparse in the standard basis when sparsity > 0.  The
// planted pair is normalized so the lifted ground truth has unit Frobenius
// norm, which makes the absolute success threshold scale-free.
struct TrialConfig {
  Index L = 0;
  Index K = 0;
  Index N = 0;
  Index sparsity = 0;  // 0 = dense filter
  Scenario scenario = Scenario::gaussian;
  SolverConfig solver{};     // solver.seed is derived from `seed`, not read
  std::uint64_t seed = 0;    // drives instance generation and the solver init
  double threshold = 1e-1;   // success iff lifted error <= threshold
};

// Throws std::invalid_argument naming the offending field.
void validate(const TrialConfig& cfg);

// The seeded planted instance a trial runs on: normalized factors, the
// measurement operator, and the measurement table.  Exposed so artifact dumps
// see byte-identical instances to the trials that consume them.
struct TrialInstance {
  VecX h;                      // length L, unit norm
  VecX m;                      // length K*N, unit norm
  std::vector<Index> support;  // sparse-filter support; empty when dense
  MeasurementOp op;
  CMatX yhat;  // L x N lifted measurements
};

// Generates the instance and forms the measurements through the lifted map,
// cross-checked once against the time-domain circular convolutions.
TrialInstance make_trial_instance(const TrialConfig& cfg);

// Outcome of one trial.  `error` is |H M^T - h m^T|_F against the normalized
// ground truth; a solver exception is recorded as a failed trial with unit
// error (the error of recovering nothing) and never propagates.
struct TrialRecord {
  std::uint64_t seed = 0;
  bool success = false;
  double error = 1.0;
  double residual = 0.0;       // measurement-space misfit of the returned pair
  double sigma_ratio_h = 0.0;  // rank-1-ness of the returned factors
  double sigma_ratio_m = 0.0;
  int iterations = 0;
  bool converged = false;
  bool solver_error = false;
  double seconds = 0.0;  // wall time of the solve, not covered by determinism
};

// Generates the instance, forms the measurements through the lifted map
// (cross-checked once per trial against the time-domain circular
// convolutions), solves, and classifies.  Deterministic given cfg + seed in
// every field except `seconds`.
TrialRecord run_trial(const TrialConfig& cfg);

// ---------------------------------------------------------------------------
// Phase-transition grids
// ---------------------------------------------------------------------------

// Which of the three problem dimensions an axis sweeps.
enum class Dim { L, K, N };

std::string to_string(Dim dim);
Dim dim_from_string(const std::string& name);  // accepts "L", "K", "N"

struct AxisSpec {
  Dim dim = Dim::L;
  std::vector<Index> values;
};

// Rectangular sweep over two of {L, K, N} with the third held fixed.  Every
// cell runs `trials` independent seeded experiments.
struct GridSpec {
  AxisSpec rows;
  AxisSpec cols;
  Index fixed = 0;  // value of the dimension neither axis sweeps
  Index sparsity = 0;
  Scenario scenario = Scenario::gaussian;
  SolverConfig solver{};
  int trials = 25;
  double threshold = 1e-1;
  std::uint64_t seed = 0;
  int threads = 0;          // <= 0: all hardware threads
  std::string checkpoint;   // optional newline-delimited JSON trial log
};

void validate(const GridSpec& spec);

// The dimension neither axis sweeps.
Dim fixed_dim(const GridSpec& spec);

// Per-cell aggregate; cells are stored row-major.
struct CellStats {
  Index cell_id = 0;
  Index L = 0;
  Index K = 0;
  Index N = 0;
  int trials = 0;
  int successes = 0;
  double mean_error = 0.0;
  double mean_seconds = 0.0;
};

struct PhaseGrid {
  GridSpec spec;
  std::vector<CellStats> cells;  // rows.values.size() x cols.values.size()
  double total_seconds = 0.0;    // summed per-trial solve time

  [[nodiscard]] const CellStats& cell(Index r, Index c) const;
  [[nodiscard]] double rate(Index r, Index c) const;  // successes / trials
};

// Pure function of (master seed, cell, trial); gives every trial an
// independent stream regardless of the dispatch schedule.
std::uint64_t trial_seed(std::uint64_t master, Index cell_id, int trial);

// The fully-resolved config of one trial of one cell.
TrialConfig cell_config(const GridSpec& spec, Index r, Index c, int trial);

// Runs the grid on a worker pool (cells are the unit of dispatch).  When
// spec.checkpoint is set, every finished trial is appended to the file as one
// JSON line; with resume = true, records already present are trusted and only
// the missing trials run.  Stale records (wrong seed or out-of-range ids) are
// ignored.  Per-trial failures are recorded, never fatal.
PhaseGrid phase_grid(const GridSpec& spec, bool resume = false);

// Aggregates whatever spec.checkpoint already holds, without running any
// trial; cells report trials = number of records found (possibly fewer than
// spec.trials, possibly zero).  Throws when the file cannot be read.
PhaseGrid load_grid(const GridSpec& spec);

// Smallest swept L with success rate >= 1/2, per value of the other swept
// axis; `defined` is false when no swept L reaches the rate.
struct BoundaryEstimate {
  Index axis_value = 0;  // value of the non-L swept axis
  bool defined = false;
  Index smallest_L = 0;
};

struct GridSummary {
  std::vector<CellStats> cells;
  std::vector<BoundaryEstimate> boundary;  // empty when L is not swept
  double total_seconds = 0.0;
};

// Throws std::invalid_argument on an empty grid.
GridSummary summarize(const PhaseGrid& grid);

// CSV with the pinned header
//   cell_id,L,K,N,scenario,trials,successes,mean_error,mean_seconds
void write_grid_csv(const PhaseGrid& grid, std::ostream& out);
void write_grid_csv(const PhaseGrid& grid, const std::string& path);

}  // namespace mdc
