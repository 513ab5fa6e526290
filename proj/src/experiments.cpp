#include "multidecon/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "json.hpp"

#include "multidecon/lifting.hpp"
#include "multidecon/rng.hpp"
#include "multidecon/spectral.hpp"

namespace mdc {

namespace {

using json = nlohmann::json;

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  const auto dt = std::chrono::steady_clock::now() - start;
  return std::chrono::duration<double>(dt).count();
}

// %.{prec}g rendering, locale-independent enough for machine-read CSV.
std::string format_double(double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
  return buf;
}

void require(bool ok, const char* who, const char* message) {
  if (!ok) throw std::invalid_argument(std::string(who) + ": " + message);
}

json record_to_json(const CellStats& dims, int trial, const TrialRecord& rec,
                    const std::string& scenario) {
  return json{{"cell_id", dims.cell_id},
              {"trial", trial},
              {"seed", rec.seed},
              {"L", dims.L},
              {"K", dims.K},
              {"N", dims.N},
              {"scenario", scenario},
              {"success", rec.success},
              {"error", rec.error},
              {"residual", rec.residual},
              {"sigma_ratio_h", rec.sigma_ratio_h},
              {"sigma_ratio_m", rec.sigma_ratio_m},
              {"iterations", rec.iterations},
              {"converged", rec.converged},
              {"solver_error", rec.solver_error},
              {"seconds", rec.seconds}};
}

// Fills slots/have from the checkpoint, ignoring malformed or stale lines.
void load_records(const GridSpec& spec, Index n_cells, int trials,
                  std::vector<std::vector<TrialRecord>>& slots,
                  std::vector<std::vector<char>>& have) {
  std::ifstream in(spec.checkpoint);
  std::string line;
  while (in && std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) continue;
    const Index cell = j.value("cell_id", Index{-1});
    const int trial = j.value("trial", -1);
    if (cell < 0 || cell >= n_cells || trial < 0 || trial >= trials) continue;
    // Trust a record only if it matches the seed this spec would use.
    if (j.value("seed", std::uint64_t{0}) != trial_seed(spec.seed, cell, trial)) continue;
    TrialRecord rec;
    rec.seed = j.value("seed", std::uint64_t{0});
    rec.success = j.value("success", false);
    rec.error = j.value("error", 1.0);
    rec.residual = j.value("residual", 0.0);
    rec.sigma_ratio_h = j.value("sigma_ratio_h", 0.0);
    rec.sigma_ratio_m = j.value("sigma_ratio_m", 0.0);
    rec.iterations = j.value("iterations", 0);
    rec.converged = j.value("converged", false);
    rec.solver_error = j.value("solver_error", false);
    rec.seconds = j.value("seconds", 0.0);
    slots[static_cast<std::size_t>(cell)][static_cast<std::size_t>(trial)] = rec;
    have[static_cast<std::size_t>(cell)][static_cast<std::size_t>(trial)] = 1;
  }
}

}  // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::gaussian: return "gaussian";
    case Scenario::identity_subset: return "identity_subset";
  }
  throw std::invalid_argument("to_string: unknown scenario");
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "gaussian") return Scenario::gaussian;
  if (name == "identity_subset") return Scenario::identity_subset;
  throw std::invalid_argument("scenario_from_string: unknown scenario '" + name + "'");
}

std::string to_string(Dim dim) {
  switch (dim) {
    case Dim::L: return "L";
    case Dim::K: return "K";
    case Dim::N: return "N";
  }
  throw std::invalid_argument("to_string: unknown dimension");
}

Dim dim_from_string(const std::string& name) {
  if (name == "L") return Dim::L;
  if (name == "K") return Dim::K;
  if (name == "N") return Dim::N;
  throw std::invalid_argument("dim_from_string: unknown dimension '" + name + "'");
}

void validate(const TrialConfig& cfg) {
  const char* who = "TrialConfig";
  require(cfg.L >= 1, who, "L must be positive");
  require(cfg.K >= 1, who, "K must be positive");
  require(cfg.N >= 1, who, "N must be positive");
  require(cfg.K <= cfg.L, who, "K must not exceed L (inputs live in K-dim subspaces of R^L)");
  require(cfg.sparsity >= 0 && cfg.sparsity <= cfg.L, who, "sparsity must lie in [0, L]");
  require(cfg.threshold > 0.0, who, "threshold must be positive");
  require(cfg.solver.rank >= 1, who, "solver.rank must be positive");
}

TrialInstance make_trial_instance(const TrialConfig& cfg) {
  validate(cfg);
  const Rng root(cfg.seed);
  Rng gen = root.fork(1);

  TrialInstance inst;
  // Planted pair, normalized so the lifted truth h m^T has unit Frobenius
  // norm; the absolute success threshold is then scale-free.
  inst.h = cfg.sparsity > 0 ? sparse_gaussian_vec(cfg.L, cfg.sparsity, gen, &inst.support)
                            : gen.normal_vec(cfg.L);
  inst.h /= inst.h.norm();
  inst.m = gen.normal_vec(cfg.K * cfg.N);
  inst.m /= inst.m.norm();

  std::vector<MatX> bases;
  bases.reserve(static_cast<std::size_t>(cfg.N));
  for (Index n = 0; n < cfg.N; ++n)
    bases.push_back(cfg.scenario == Scenario::gaussian
                        ? gaussian_basis(cfg.L, cfg.K, gen)
                        : identity_subset_basis(cfg.L, cfg.K, gen));
  inst.op = build_measurement_op(std::move(bases));

  const MatX h_col = inst.h;
  const MatX m_col = inst.m;
  inst.yhat = forward_factored(inst.op, h_col, m_col);

  // One consistency check per instance: the lifted measurements are the
  // spectra of the time-domain circular convolutions of the planted signals.
  double conv_diff_sq = 0.0;
  for (Index n = 0; n < cfg.N; ++n) {
    const VecX x_n =
        inst.op.bases_x[static_cast<std::size_t>(n)] * inst.m.segment(n * cfg.K, cfg.K);
    conv_diff_sq += (dft(circular_convolve(inst.h, x_n)) - inst.yhat.col(n)).squaredNorm();
  }
  if (!(std::sqrt(conv_diff_sq) <= 1e-9 * std::max(1.0, inst.yhat.norm())))
    throw std::logic_error(
        "make_trial_instance: lifted measurements disagree with circular convolution");
  return inst;
}

TrialRecord run_trial(const TrialConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const TrialInstance inst = make_trial_instance(cfg);

  TrialRecord rec;
  rec.seed = cfg.seed;

  SolverConfig solver = cfg.solver;
  solver.seed = Rng(cfg.seed).fork(2).seed();
  try {
    const SolveReport report = solve_blind_deconv(inst.op, inst.yhat, solver);
    const MatX& H = report.factors.H;
    const MatX& M = report.factors.M;
    // |H M^T - h m^T|_F^2 via Gram matrices; |h m^T|_F = 1 by construction.
    const double prod_sq = ((H.transpose() * H).cwiseProduct(M.transpose() * M)).sum();
    const double cross = (H.transpose() * inst.h).dot(M.transpose() * inst.m);
    rec.error = std::sqrt(std::max(0.0, prod_sq - 2.0 * cross + 1.0));
    rec.residual = report.residual;
    rec.sigma_ratio_h = report.sigma_ratio_h;
    rec.sigma_ratio_m = report.sigma_ratio_m;
    rec.iterations = report.iterations;
    rec.converged = report.converged;
    rec.success = rec.error <= cfg.threshold;
  } catch (const std::exception&) {
    // A failed solve counts as an unrecovered instance (unit error), so a
    // flaky cell can never abort a grid.
    rec.solver_error = true;
    rec.error = 1.0;
    rec.success = false;
  }
  rec.seconds = elapsed_seconds(start);
  return rec;
}

void validate(const GridSpec& spec) {
  const char* who = "GridSpec";
  require(spec.rows.dim != spec.cols.dim, who, "rows and cols must sweep different dimensions");
  require(!spec.rows.values.empty(), who, "rows.values must be non-empty");
  require(!spec.cols.values.empty(), who, "cols.values must be non-empty");
  for (Index v : spec.rows.values) require(v >= 1, who, "rows.values must be positive");
  for (Index v : spec.cols.values) require(v >= 1, who, "cols.values must be positive");
  require(spec.fixed >= 1, who, "fixed value must be positive");
  require(spec.trials >= 1, who, "trials must be positive");
  require(spec.threshold > 0.0, who, "threshold must be positive");
  require(spec.solver.rank >= 1, who, "solver.rank must be positive");

  // Every cell must describe a valid instance.
  const Index rows = static_cast<Index>(spec.rows.values.size());
  const Index cols = static_cast<Index>(spec.cols.values.size());
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const TrialConfig cfg = cell_config(spec, r, c, 0);
      require(cfg.K <= cfg.L, who, "every cell needs K <= L");
      require(cfg.sparsity <= cfg.L, who, "every cell needs sparsity <= L");
    }
}

Dim fixed_dim(const GridSpec& spec) {
  const bool has_l = spec.rows.dim == Dim::L || spec.cols.dim == Dim::L;
  const bool has_k = spec.rows.dim == Dim::K || spec.cols.dim == Dim::K;
  if (!has_l) return Dim::L;
  if (!has_k) return Dim::K;
  return Dim::N;
}

const CellStats& PhaseGrid::cell(Index r, Index c) const {
  const Index rows = static_cast<Index>(spec.rows.values.size());
  const Index cols = static_cast<Index>(spec.cols.values.size());
  if (r < 0 || r >= rows || c < 0 || c >= cols)
    throw std::out_of_range("PhaseGrid::cell: index out of range");
  return cells[static_cast<std::size_t>(r * cols + c)];
}

double PhaseGrid::rate(Index r, Index c) const {
  const CellStats& stats = cell(r, c);
  return stats.trials > 0 ? static_cast<double>(stats.successes) / stats.trials : 0.0;
}

std::uint64_t trial_seed(std::uint64_t master, Index cell_id, int trial) {
  return Rng(master)
      .fork(static_cast<std::uint64_t>(cell_id))
      .fork(static_cast<std::uint64_t>(trial))
      .seed();
}

TrialConfig cell_config(const GridSpec& spec, Index r, Index c, int trial) {
  if (r < 0 || r >= static_cast<Index>(spec.rows.values.size()) || c < 0 ||
      c >= static_cast<Index>(spec.cols.values.size()))
    throw std::out_of_range("cell_config: cell index out of range");

  TrialConfig cfg;
  cfg.scenario = spec.scenario;
  cfg.sparsity = spec.sparsity;
  cfg.solver = spec.solver;
  cfg.threshold = spec.threshold;

  const auto assign = [&cfg](Dim dim, Index value) {
    switch (dim) {
      case Dim::L: cfg.L = value; break;
      case Dim::K: cfg.K = value; break;
      case Dim::N: cfg.N = value; break;
    }
  };
  assign(spec.rows.dim, spec.rows.values[static_cast<std::size_t>(r)]);
  assign(spec.cols.dim, spec.cols.values[static_cast<std::size_t>(c)]);
  assign(fixed_dim(spec), spec.fixed);

  const Index cols = static_cast<Index>(spec.cols.values.size());
  cfg.seed = trial_seed(spec.seed, r * cols + c, trial);
  return cfg;
}

PhaseGrid phase_grid(const GridSpec& spec, bool resume) {
  validate(spec);
  const Index rows = static_cast<Index>(spec.rows.values.size());
  const Index cols = static_cast<Index>(spec.cols.values.size());
  const Index n_cells = rows * cols;
  const int trials = spec.trials;

  // Trial slots are positional so the aggregation below is independent of the
  // dispatch schedule and of fresh-vs-resumed execution order.
  std::vector<std::vector<TrialRecord>> slots(static_cast<std::size_t>(n_cells));
  std::vector<std::vector<char>> have(static_cast<std::size_t>(n_cells));
  for (auto& s : slots) s.resize(static_cast<std::size_t>(trials));
  for (auto& s : have) s.assign(static_cast<std::size_t>(trials), 0);

  const auto cell_dims = [&spec, cols](Index id) {
    CellStats dims;
    dims.cell_id = id;
    const TrialConfig cfg = cell_config(spec, id / cols, id % cols, 0);
    dims.L = cfg.L;
    dims.K = cfg.K;
    dims.N = cfg.N;
    return dims;
  };

  std::mutex io_mutex;
  std::ofstream log;
  if (!spec.checkpoint.empty()) {
    if (resume) load_records(spec, n_cells, trials, slots, have);
    log.open(spec.checkpoint, resume ? std::ios::app : std::ios::trunc);
    if (!log) throw std::runtime_error("phase_grid: cannot open checkpoint file " + spec.checkpoint);
  }

  std::vector<Index> pending;
  for (Index id = 0; id < n_cells; ++id) {
    const auto& done = have[static_cast<std::size_t>(id)];
    if (std::find(done.begin(), done.end(), 0) != done.end()) pending.push_back(id);
  }

  const std::string scenario_name = to_string(spec.scenario);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= pending.size()) return;
      const Index id = pending[task];
      const CellStats dims = cell_dims(id);
      for (int t = 0; t < trials; ++t) {
        if (have[static_cast<std::size_t>(id)][static_cast<std::size_t>(t)]) continue;
        TrialRecord rec;
        try {
          rec = run_trial(cell_config(spec, id / cols, id % cols, t));
        } catch (const std::exception& e) {
          rec.seed = trial_seed(spec.seed, id, t);
          rec.solver_error = true;
          rec.error = 1.0;
          const std::lock_guard<std::mutex> lock(io_mutex);
          std::cerr << "phase_grid: cell " << id << " trial " << t << " failed: " << e.what()
                    << '\n';
        }
        slots[static_cast<std::size_t>(id)][static_cast<std::size_t>(t)] = rec;
        have[static_cast<std::size_t>(id)][static_cast<std::size_t>(t)] = 1;
        if (log.is_open()) {
          const std::lock_guard<std::mutex> lock(io_mutex);
          log << record_to_json(dims, t, rec, scenario_name).dump() << '\n' << std::flush;
        }
      }
    }
  };

  unsigned n_threads = spec.threads > 0 ? static_cast<unsigned>(spec.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, std::max<std::size_t>(pending.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  PhaseGrid grid;
  grid.spec = spec;
  grid.cells.reserve(static_cast<std::size_t>(n_cells));
  for (Index id = 0; id < n_cells; ++id) {
    CellStats stats = cell_dims(id);
    stats.trials = trials;
    double sum_error = 0.0, sum_seconds = 0.0;
    for (const TrialRecord& rec : slots[static_cast<std::size_t>(id)]) {
      if (rec.success) ++stats.successes;
      sum_error += rec.error;
      sum_seconds += rec.seconds;
    }
    stats.mean_error = sum_error / trials;
    stats.mean_seconds = sum_seconds / trials;
    grid.total_seconds += sum_seconds;
    grid.cells.push_back(stats);
  }
  return grid;
}

PhaseGrid load_grid(const GridSpec& spec) {
  validate(spec);
  if (spec.checkpoint.empty())
    throw std::invalid_argument("load_grid: spec.checkpoint must name a trial log");
  {
    const std::ifstream probe(spec.checkpoint);
    if (!probe) throw std::runtime_error("load_grid: cannot read " + spec.checkpoint);
  }
  const Index cols = static_cast<Index>(spec.cols.values.size());
  const Index n_cells = static_cast<Index>(spec.rows.values.size()) * cols;
  std::vector<std::vector<TrialRecord>> slots(static_cast<std::size_t>(n_cells));
  std::vector<std::vector<char>> have(static_cast<std::size_t>(n_cells));
  for (auto& s : slots) s.resize(static_cast<std::size_t>(spec.trials));
  for (auto& s : have) s.assign(static_cast<std::size_t>(spec.trials), 0);
  load_records(spec, n_cells, spec.trials, slots, have);

  PhaseGrid grid;
  grid.spec = spec;
  grid.cells.reserve(static_cast<std::size_t>(n_cells));
  for (Index id = 0; id < n_cells; ++id) {
    CellStats stats;
    stats.cell_id = id;
    const TrialConfig cfg = cell_config(spec, id / cols, id % cols, 0);
    stats.L = cfg.L;
    stats.K = cfg.K;
    stats.N = cfg.N;
    double sum_error = 0.0, sum_seconds = 0.0;
    for (int t = 0; t < spec.trials; ++t) {
      if (!have[static_cast<std::size_t>(id)][static_cast<std::size_t>(t)]) continue;
      const TrialRecord& rec = slots[static_cast<std::size_t>(id)][static_cast<std::size_t>(t)];
      ++stats.trials;
      if (rec.success) ++stats.successes;
      sum_error += rec.error;
      sum_seconds += rec.seconds;
    }
    if (stats.trials > 0) {
      stats.mean_error = sum_error / stats.trials;
      stats.mean_seconds = sum_seconds / stats.trials;
    }
    grid.total_seconds += sum_seconds;
    grid.cells.push_back(stats);
  }
  return grid;
}

GridSummary summarize(const PhaseGrid& grid) {
  if (grid.cells.empty()) throw std::invalid_argument("summarize: empty grid");
  GridSummary summary;
  summary.cells = grid.cells;
  summary.total_seconds = grid.total_seconds;

  const bool rows_are_l = grid.spec.rows.dim == Dim::L;
  const bool cols_are_l = grid.spec.cols.dim == Dim::L;
  if (!rows_are_l && !cols_are_l) return summary;  // no L sweep: no boundary

  const auto& l_axis = rows_are_l ? grid.spec.rows : grid.spec.cols;
  const auto& other_axis = rows_are_l ? grid.spec.cols : grid.spec.rows;
  const Index n_l = static_cast<Index>(l_axis.values.size());
  const Index n_other = static_cast<Index>(other_axis.values.size());

  for (Index o = 0; o < n_other; ++o) {
    BoundaryEstimate estimate;
    estimate.axis_value = other_axis.values[static_cast<std::size_t>(o)];
    for (Index i = 0; i < n_l; ++i) {
      const double rate = rows_are_l ? grid.rate(i, o) : grid.rate(o, i);
      if (rate < 0.5) continue;
      const Index l_value = l_axis.values[static_cast<std::size_t>(i)];
      if (!estimate.defined || l_value < estimate.smallest_L) {
        estimate.defined = true;
        estimate.smallest_L = l_value;
      }
    }
    summary.boundary.push_back(estimate);
  }
  return summary;
}

void write_grid_csv(const PhaseGrid& grid, std::ostream& out) {
  out << "cell_id,L,K,N,scenario,trials,successes,mean_error,mean_seconds\n";
  const std::string scenario_name = to_string(grid.spec.scenario);
  for (const CellStats& cell : grid.cells) {
    out << cell.cell_id << ',' << cell.L << ',' << cell.K << ',' << cell.N << ','
        << scenario_name << ',' << cell.trials << ',' << cell.successes << ','
        << format_double(cell.mean_error, 9) << ',' << format_double(cell.mean_seconds, 6)
        << '\n';
  }
}

void write_grid_csv(const PhaseGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_grid_csv: cannot open " + path);
  write_grid_csv(grid, out);
  if (!out) throw std::runtime_error("write_grid_csv: write failed on " + path);
}

}  // namespace mdc
