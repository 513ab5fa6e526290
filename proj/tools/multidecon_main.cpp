// Command-line front end: instance generation, single solves, coherence and
// certificate reports, and phase-transition grids, all driven by JSON config
// files.  Machine-readable results land in --out; progress goes to stderr.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "multidecon/certificate.hpp"
#include "multidecon/coherence.hpp"
#include "multidecon/experiments.hpp"
#include "multidecon/lifting.hpp"
#include "multidecon/rng.hpp"
#include "multidecon/solver.hpp"
#include "multidecon/spectral.hpp"

#ifndef MULTIDECON_GIT_VERSION
#define MULTIDECON_GIT_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mdc;

namespace {

// Malformed run configuration; reported with exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;  // 0 = all hardware threads
  bool resume = false;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    json j = json::parse(in);  // exceptions carry line/column diagnostics
    if (!j.is_object()) throw ConfigError(path + ": top-level config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T read_field(const json& j, const std::string& where, const char* key,
             std::optional<T> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing required field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

SolverConfig read_solver(const json& parent, const std::string& where) {
  SolverConfig cfg;
  if (!parent.contains("solver")) return cfg;
  const json& j = parent.at("solver");
  if (!j.is_object()) throw ConfigError(where + ": field 'solver' must be an object");
  const std::string sub = where + ".solver";
  check_keys(j, sub,
             {"rank", "rounds", "penalty_init", "penalty_final", "grad_tol",
              "max_iters_per_round", "memory", "wolfe_c1", "wolfe_c2", "max_line_search"});
  cfg.rank = read_field<Index>(j, sub, "rank", cfg.rank);
  cfg.rounds = read_field<int>(j, sub, "rounds", cfg.rounds);
  cfg.penalty_init = read_field<double>(j, sub, "penalty_init", cfg.penalty_init);
  cfg.penalty_final = read_field<double>(j, sub, "penalty_final", cfg.penalty_final);
  cfg.grad_tol = read_field<double>(j, sub, "grad_tol", cfg.grad_tol);
  cfg.max_iters_per_round =
      read_field<int>(j, sub, "max_iters_per_round", cfg.max_iters_per_round);
  cfg.memory = read_field<int>(j, sub, "memory", cfg.memory);
  cfg.wolfe_c1 = read_field<double>(j, sub, "wolfe_c1", cfg.wolfe_c1);
  cfg.wolfe_c2 = read_field<double>(j, sub, "wolfe_c2", cfg.wolfe_c2);
  cfg.max_line_search = read_field<int>(j, sub, "max_line_search", cfg.max_line_search);
  return cfg;
}

json solver_to_json(const SolverConfig& cfg) {
  return json{{"rank", cfg.rank},
              {"rounds", cfg.rounds},
              {"penalty_init", cfg.penalty_init},
              {"penalty_final", cfg.penalty_final},
              {"grad_tol", cfg.grad_tol},
              {"max_iters_per_round", cfg.max_iters_per_round},
              {"memory", cfg.memory},
              {"wolfe_c1", cfg.wolfe_c1},
              {"wolfe_c2", cfg.wolfe_c2},
              {"max_line_search", cfg.max_line_search}};
}

Scenario read_scenario(const json& j, const std::string& where) {
  const std::string name = read_field<std::string>(j, where, "scenario", std::string("gaussian"));
  try {
    return scenario_from_string(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

fs::path ensure_out_dir(const GlobalArgs& g) {
  const fs::path dir(g.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed on " + path.string());
}

json base_report(const char* command, json resolved_config) {
  return json{{"version", MULTIDECON_GIT_VERSION},
              {"command", command},
              {"config", std::move(resolved_config)}};
}

std::vector<double> to_std(const VecX& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// ---------------------------------------------------------------------------
// gen / solve
// ---------------------------------------------------------------------------

std::pair<TrialConfig, json> parse_trial_config(const json& j, const GlobalArgs& g) {
  check_keys(j, "config", {"L", "K", "N", "sparsity", "scenario", "seed", "threshold", "solver"});
  TrialConfig cfg;
  cfg.L = read_field<Index>(j, "config", "L");
  cfg.K = read_field<Index>(j, "config", "K");
  cfg.N = read_field<Index>(j, "config", "N");
  cfg.sparsity = read_field<Index>(j, "config", "sparsity", Index{0});
  cfg.scenario = read_scenario(j, "config");
  cfg.threshold = read_field<double>(j, "config", "threshold", 1e-1);
  cfg.seed = g.seed_set ? g.seed : read_field<std::uint64_t>(j, "config", "seed", 0);
  cfg.solver = read_solver(j, "config");
  validate(cfg);

  const json resolved{{"L", cfg.L},
                      {"K", cfg.K},
                      {"N", cfg.N},
                      {"sparsity", cfg.sparsity},
                      {"scenario", to_string(cfg.scenario)},
                      {"threshold", cfg.threshold},
                      {"seed", cfg.seed},
                      {"solver", solver_to_json(cfg.solver)}};
  return {cfg, resolved};
}

int cmd_gen(const GlobalArgs& g) {
  const auto [cfg, resolved] = parse_trial_config(load_config(g.config_path), g);
  std::cerr << "gen: L=" << cfg.L << " K=" << cfg.K << " N=" << cfg.N
            << " scenario=" << to_string(cfg.scenario) << " seed=" << cfg.seed << '\n';
  const TrialInstance inst = make_trial_instance(cfg);

  json yhat_re = json::array(), yhat_im = json::array();
  for (Index n = 0; n < cfg.N; ++n) {
    yhat_re.push_back(to_std(inst.yhat.col(n).real()));
    yhat_im.push_back(to_std(inst.yhat.col(n).imag()));
  }
  json report = base_report("gen", resolved);
  report["h"] = to_std(inst.h);
  report["m"] = to_std(inst.m);
  report["support"] = inst.support;
  report["yhat_re"] = std::move(yhat_re);
  report["yhat_im"] = std::move(yhat_im);

  const fs::path out = ensure_out_dir(g) / "gen_instance.json";
  write_json_file(out, report);
  std::cerr << "gen: wrote " << out.string() << '\n';
  return 0;
}

int cmd_solve(const GlobalArgs& g) {
  const auto [cfg, resolved] = parse_trial_config(load_config(g.config_path), g);
  std::cerr << "solve: L=" << cfg.L << " K=" << cfg.K << " N=" << cfg.N
            << " scenario=" << to_string(cfg.scenario) << " seed=" << cfg.seed << '\n';
  const TrialRecord rec = run_trial(cfg);

  json report = base_report("solve", resolved);
  report["seed"] = rec.seed;
  report["success"] = rec.success;
  report["error"] = rec.error;
  report["residual"] = rec.residual;
  report["sigma_ratio_h"] = rec.sigma_ratio_h;
  report["sigma_ratio_m"] = rec.sigma_ratio_m;
  report["iterations"] = rec.iterations;
  report["converged"] = rec.converged;
  report["solver_error"] = rec.solver_error;
  report["seconds"] = rec.seconds;

  const fs::path out = ensure_out_dir(g) / "solve_report.json";
  write_json_file(out, report);
  std::cerr << "solve: " << (rec.success ? "success" : "failure") << " error=" << rec.error
            << " in " << rec.iterations << " iterations; wrote " << out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// coherence / certify
// ---------------------------------------------------------------------------

json injectivity_to_json(const InjectivityReport& report) {
  return json{{"lambda_min", report.lambda_min},
              {"gram_deviation", report.gram_deviation},
              {"margin", report.margin},
              {"dim", report.dim},
              {"pass", report.pass()}};
}

json margins_to_json(const OptimalityMargins& margins) {
  return json{{"frobenius_margin", margins.frobenius_margin},
              {"spectral_margin", margins.spectral_margin},
              {"injectivity", injectivity_to_json(margins.injectivity)},
              {"gamma", margins.gamma},
              {"pass", margins.pass}};
}

int cmd_coherence(const GlobalArgs& g) {
  const json j = load_config(g.config_path);
  check_keys(j, "config", {"L", "K", "N", "S", "P", "seed", "basis", "beta"});
  const Index L = read_field<Index>(j, "config", "L");
  const Index K = read_field<Index>(j, "config", "K");
  const Index N = read_field<Index>(j, "config", "N");
  const Index S = read_field<Index>(j, "config", "S");
  const double beta = read_field<double>(j, "config", "beta", 4.0);
  const std::string basis_name =
      read_field<std::string>(j, "config", "basis", std::string("identity"));
  if (basis_name != "identity" && basis_name != "random_orthonormal")
    throw ConfigError("config: field 'basis' must be 'identity' or 'random_orthonormal'");
  const std::uint64_t seed =
      g.seed_set ? g.seed : read_field<std::uint64_t>(j, "config", "seed", 0);
  const Index P = read_field<Index>(j, "config", "P", default_rounds(L, K, N, S, beta));
  if (P < 1) throw ConfigError("config: field 'P' must be positive");

  // Partition rounds need P | L; signals are zero-extended to the padded
  // length, so every reported quantity refers to effective_L.
  const Index eff_l = padded_length(L, P);
  if (eff_l != L)
    std::cerr << "coherence: padding L=" << L << " to " << eff_l << " (divisible by P=" << P
              << ")\n";
  if (S > eff_l / P)
    throw ConfigError("config: field 'S' must not exceed the block size Q = L/P");

  const json resolved{{"L", L},       {"K", K},           {"N", N},
                      {"S", S},       {"P", P},           {"seed", seed},
                      {"beta", beta}, {"basis", basis_name}};
  std::cerr << "coherence: L=" << eff_l << " K=" << K << " N=" << N << " S=" << S << " P=" << P
            << " basis=" << basis_name << " seed=" << seed << '\n';

  const Rng root(seed);
  Rng gen = root.fork(1);
  const MatX basis =
      basis_name == "identity" ? MatX() : random_orthonormal_basis(eff_l, gen);
  std::vector<Index> support;
  const VecX h = sparse_gaussian_vec(eff_l, S, gen, &support);
  const VecX m = gen.normal_vec(K * N);
  std::vector<VecX> m_blocks;
  for (Index n = 0; n < N; ++n) m_blocks.push_back(m.segment(n * K, K));

  const GolfingPartition partition = build_partition(eff_l, N, P, root.fork(2).seed());
  const SOperators s_ops = build_S(partition, basis, support);

  CoherenceReport rep;
  // The standard basis has a perfectly flat transform: its largest scaled
  // squared entry is exactly one, with nothing to measure.
  rep.mu_max_sq = basis.size() == 0 ? 1.0 : mu_max_sq(basis);
  rep.rho0_sq = rho0_sq(m_blocks);
  rep.mu0 = mu0_sq(basis, h, partition, s_ops);
  rep.rip_deviation = rip_deviation(partition, basis, support);
  rep.margins = theorem_bound(static_cast<double>(eff_l), static_cast<double>(K),
                              static_cast<double>(N), static_cast<double>(S), rep.mu0.value,
                              rep.mu_max_sq, rep.rho0_sq, beta);

  json report = base_report("coherence", resolved);
  report["effective_L"] = eff_l;
  report["mu_max_sq"] = rep.mu_max_sq;
  report["rho0_sq"] = rep.rho0_sq;
  report["mu0_sq"] = rep.mu0.value;
  report["mu0_terms"] = rep.mu0.terms;
  report["rip_deviation"] = rep.rip_deviation;
  report["eigen_bounds_ok"] = s_ops.eigen_bounds_ok();
  report["margins"] = json{{"alpha1", rep.margins.alpha1},
                           {"alpha2", rep.margins.alpha2},
                           {"log_ln", rep.margins.log_ln},
                           {"l_margin", rep.margins.l_margin},
                           {"n_margin", rep.margins.n_margin},
                           {"defined", rep.margins.defined},
                           {"satisfied", rep.margins.satisfied()}};

  const fs::path out = ensure_out_dir(g) / "coherence_report.json";
  write_json_file(out, report);
  std::cerr << "coherence: wrote " << out.string() << '\n';
  return 0;
}

int cmd_certify(const GlobalArgs& g) {
  const json j = load_config(g.config_path);
  check_keys(j, "config", {"L", "K", "N", "S", "P", "seed", "gamma", "beta"});
  const Index L = read_field<Index>(j, "config", "L");
  const Index K = read_field<Index>(j, "config", "K");
  const Index N = read_field<Index>(j, "config", "N");
  const Index S = read_field<Index>(j, "config", "S");
  const double beta = read_field<double>(j, "config", "beta", 4.0);
  const std::string gamma_mode =
      read_field<std::string>(j, "config", "gamma", std::string("exact"));
  if (gamma_mode != "exact" && gamma_mode != "bound")
    throw ConfigError("config: field 'gamma' must be 'exact' or 'bound'");
  const std::uint64_t seed =
      g.seed_set ? g.seed : read_field<std::uint64_t>(j, "config", "seed", 0);
  const Index P = read_field<Index>(j, "config", "P", default_rounds(L, K, N, S, beta));
  if (P < 1) throw ConfigError("config: field 'P' must be positive");

  const Index eff_l = padded_length(L, P);
  if (eff_l != L)
    std::cerr << "certify: padding L=" << L << " to " << eff_l << " (divisible by P=" << P
              << ")\n";
  if (S > eff_l / P)
    throw ConfigError("config: field 'S' must not exceed the block size Q = L/P");

  const json resolved{{"L", L},       {"K", K},    {"N", N},
                      {"S", S},       {"P", P},    {"seed", seed},
                      {"beta", beta}, {"gamma", gamma_mode}};
  std::cerr << "certify: L=" << eff_l << " K=" << K << " N=" << N << " S=" << S << " P=" << P
            << " gamma=" << gamma_mode << " seed=" << seed << '\n';

  Rng rng(seed);
  std::vector<MatX> bases;
  for (Index n = 0; n < N; ++n) bases.push_back(gaussian_basis(eff_l, K, rng));
  const MeasurementOp op = build_measurement_op(std::move(bases));
  std::vector<Index> support;
  VecX h = sparse_gaussian_vec(eff_l, S, rng, &support);
  VecX m = rng.normal_vec(K * N);
  const GolfingPartition partition = build_partition(eff_l, N, P, rng.fork(1).seed());
  const SOperators s_ops = build_S(partition, MatX(), support);
  const ProjectorContext ctx = make_projector_context(std::move(h), std::move(m), support);

  std::vector<CMatX> iterates;
  CertificateTrace trace = golfing_certificate(ctx, op, partition, s_ops, &iterates);
  const double gamma = gamma_mode == "exact" ? operator_norm(op)
                                             : operator_norm_bound(eff_l, K, N, beta);
  trace.margins = verify_optimality(ctx, op, trace.Y, gamma);

  const Mu0Breakdown mu0 = mu0_sq(MatX(), ctx.h, partition, s_ops);
  json coherences = json::array();
  for (Index p = 0; p < P; ++p) {
    const IterateCoherences c = iterate_coherences(ctx, partition, s_ops,
                                                   iterates[static_cast<std::size_t>(p)], p,
                                                   std::sqrt(mu0.value));
    coherences.push_back(json{{"p", p},
                              {"rho", c.rho},
                              {"rho_target", c.rho_target},
                              {"nu", c.nu},
                              {"nu_target", c.nu_target},
                              {"mu", c.mu},
                              {"mu_target", c.mu_target}});
  }

  json report = base_report("certify", resolved);
  report["effective_L"] = eff_l;
  report["rounds"] = trace.rounds();
  report["w_norms"] = trace.w_norms;
  report["strictly_decreasing"] = trace.strictly_decreasing();
  report["margins"] = margins_to_json(trace.margins);
  report["mu0_sq"] = mu0.value;
  report["coherences"] = std::move(coherences);

  const fs::path out = ensure_out_dir(g) / "certify_report.json";
  write_json_file(out, report);
  std::cerr << "certify: " << (trace.margins.pass ? "PASS" : "FAIL")
            << " frobenius=" << trace.margins.frobenius_margin
            << " spectral=" << trace.margins.spectral_margin
            << " injectivity=" << trace.margins.injectivity.margin << "; wrote " << out.string()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// phase / summarize
// ---------------------------------------------------------------------------

AxisSpec read_axis(const json& parent, const std::string& where, const char* key) {
  if (!parent.contains(key))
    throw ConfigError(where + ": missing required field '" + std::string(key) + "'");
  const json& j = parent.at(key);
  if (!j.is_object())
    throw ConfigError(where + ": field '" + std::string(key) + "' must be an object");
  const std::string sub = where + "." + key;
  check_keys(j, sub, {"dim", "values"});
  AxisSpec axis;
  try {
    axis.dim = dim_from_string(read_field<std::string>(j, sub, "dim"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(sub + ": " + e.what());
  }
  axis.values = read_field<std::vector<Index>>(j, sub, "values");
  return axis;
}

std::pair<GridSpec, json> parse_grid_config(const json& j, const GlobalArgs& g) {
  check_keys(j, "config",
             {"rows", "cols", "fixed", "scenario", "sparsity", "trials", "threshold", "seed",
              "solver", "checkpoint"});
  GridSpec spec;
  spec.rows = read_axis(j, "config", "rows");
  spec.cols = read_axis(j, "config", "cols");
  spec.fixed = read_field<Index>(j, "config", "fixed");
  spec.scenario = read_scenario(j, "config");
  spec.sparsity = read_field<Index>(j, "config", "sparsity", Index{0});
  spec.trials = read_field<int>(j, "config", "trials", 25);
  spec.threshold = read_field<double>(j, "config", "threshold", 1e-1);
  spec.seed = g.seed_set ? g.seed : read_field<std::uint64_t>(j, "config", "seed", 0);
  spec.solver = read_solver(j, "config");
  spec.threads = g.threads;

  std::string checkpoint = read_field<std::string>(j, "config", "checkpoint",
                                                   std::string("phase_checkpoint.ndjson"));
  fs::path ckpt(checkpoint);
  if (ckpt.is_relative()) ckpt = fs::path(g.out_dir) / ckpt;
  spec.checkpoint = ckpt.string();
  validate(spec);

  const json resolved{{"rows", {{"dim", to_string(spec.rows.dim)}, {"values", spec.rows.values}}},
                      {"cols", {{"dim", to_string(spec.cols.dim)}, {"values", spec.cols.values}}},
                      {"fixed", spec.fixed},
                      {"fixed_dim", to_string(fixed_dim(spec))},
                      {"scenario", to_string(spec.scenario)},
                      {"sparsity", spec.sparsity},
                      {"trials", spec.trials},
                      {"threshold", spec.threshold},
                      {"seed", spec.seed},
                      {"threads", spec.threads},
                      {"checkpoint", spec.checkpoint},
                      {"solver", solver_to_json(spec.solver)}};
  return {spec, resolved};
}

json cells_to_json(const std::vector<CellStats>& cells) {
  json arr = json::array();
  for (const CellStats& c : cells)
    arr.push_back(json{{"cell_id", c.cell_id},
                       {"L", c.L},
                       {"K", c.K},
                       {"N", c.N},
                       {"trials", c.trials},
                       {"successes", c.successes},
                       {"mean_error", c.mean_error},
                       {"mean_seconds", c.mean_seconds}});
  return arr;
}

json boundary_to_json(const std::vector<BoundaryEstimate>& boundary) {
  json arr = json::array();
  for (const BoundaryEstimate& b : boundary) {
    json entry{{"axis_value", b.axis_value}, {"defined", b.defined}};
    if (b.defined) entry["smallest_L"] = b.smallest_L;
    arr.push_back(std::move(entry));
  }
  return arr;
}

int cmd_phase(const GlobalArgs& g) {
  ensure_out_dir(g);  // the checkpoint may live under --out
  const auto [spec, resolved] = parse_grid_config(load_config(g.config_path), g);
  std::cerr << "phase: " << spec.rows.values.size() << " x " << spec.cols.values.size()
            << " cells, " << spec.trials << " trials each, scenario "
            << to_string(spec.scenario) << (g.resume ? ", resuming" : "") << '\n';

  const PhaseGrid grid = phase_grid(spec, g.resume);
  const GridSummary summary = summarize(grid);

  const fs::path csv = fs::path(g.out_dir) / "phase_grid.csv";
  write_grid_csv(grid, csv.string());

  json report = base_report("phase", resolved);
  report["total_seconds"] = grid.total_seconds;
  report["cells"] = cells_to_json(grid.cells);
  report["boundary"] = boundary_to_json(summary.boundary);
  report["csv"] = csv.string();
  const fs::path out = fs::path(g.out_dir) / "phase_report.json";
  write_json_file(out, report);
  std::cerr << "phase: wrote " << csv.string() << " and " << out.string() << '\n';
  return 0;
}

int cmd_summarize(const GlobalArgs& g) {
  const auto [spec, resolved] = parse_grid_config(load_config(g.config_path), g);
  const PhaseGrid grid = load_grid(spec);
  const GridSummary summary = summarize(grid);

  int done = 0;
  for (const CellStats& c : grid.cells) done += c.trials;
  std::cerr << "summarize: " << done << " of "
            << spec.trials * static_cast<int>(grid.cells.size())
            << " trials present in the checkpoint\n";

  ensure_out_dir(g);
  const fs::path csv = fs::path(g.out_dir) / "summary.csv";
  write_grid_csv(grid, csv.string());

  json report = base_report("summarize", resolved);
  report["total_seconds"] = summary.total_seconds;
  report["cells"] = cells_to_json(summary.cells);
  report["boundary"] = boundary_to_json(summary.boundary);
  report["csv"] = csv.string();
  const fs::path out = fs::path(g.out_dir) / "summary_report.json";
  write_json_file(out, report);
  std::cerr << "summarize: wrote " << csv.string() << " and " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multidecon: blind deconvolution of one filter against many coded inputs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MULTIDECON_GIT_VERSION));

  GlobalArgs g;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", g.config_path, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", g.seed, "master seed (overrides the config)");
    sub->add_option("--threads", g.threads, "worker threads (0 = all cores)")
        ->envname("MULTIDECON_THREADS");
    sub->add_option("--out", g.out_dir, "output directory (created if missing)");
    return sub;
  };

  CLI::App* gen = add_common(app.add_subcommand("gen", "generate and dump a planted instance"));
  CLI::App* solve = add_common(app.add_subcommand("solve", "run one recovery experiment"));
  CLI::App* coherence =
      add_common(app.add_subcommand("coherence", "coherence report for a seeded instance"));
  CLI::App* certify =
      add_common(app.add_subcommand("certify", "golfing dual certificate with margins"));
  CLI::App* phase = add_common(app.add_subcommand("phase", "phase-transition grid"));
  phase->add_flag("--resume", g.resume, "trust an existing checkpoint and finish it");
  CLI::App* summarize =
      add_common(app.add_subcommand("summarize", "aggregate an existing checkpoint"));

  try {
    app.parse(argc, argv);
    const CLI::App* active = app.get_subcommands().front();
    g.seed_set = active->count("--seed") > 0;
    if (gen->parsed()) return cmd_gen(g);
    if (solve->parsed()) return cmd_solve(g);
    if (coherence->parsed()) return cmd_coherence(g);
    if (certify->parsed()) return cmd_certify(g);
    if (phase->parsed()) return cmd_phase(g);
    if (summarize->parsed()) return cmd_summarize(g);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad flags are configuration errors
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    // Library-level parameter validation: still a configuration problem.
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
