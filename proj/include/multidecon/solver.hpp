#pragma once

#include <cstdint>
#include <vector>

#include "multidecon/lbfgs.hpp"
#include "multidecon/lifting.hpp"
#include "multidecon/types.hpp"

namespace mdc {

// Low-rank factor pair for the lifted unknown X ~ H M^T.
struct FactorPair {
  MatX H;  // L x R
  MatX M;  // (K*N) x R
};

struct SolverConfig {
  Index rank = 2;
  int rounds = 4;                  // geometric penalty continuation stages
  double penalty_init = 1e-2;      // x |yhat|^2, first stage
  double penalty_final = 1e-8;     // x |yhat|^2, last stage
  double grad_tol = 1e-9;          // x max(1, |yhat|)
  int max_iters_per_round = 2000;
  int memory = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search = 40;
  std::uint64_t seed = 0;
};

struct SolveReport {
  FactorPair factors;
  double objective = 0.0;       // final penalized value
  double residual = 0.0;        // |forward(H M^T) - yhat|_2
  double grad_norm = 0.0;
  int iterations = 0;           // summed over continuation rounds
  int evaluations = 0;
  bool converged = false;       // gradient tolerance met in the final round
  double sigma_ratio_h = 0.0;   // sigma_2/sigma_1 of H (0 when R = 1)
  double sigma_ratio_m = 0.0;   // sigma_2/sigma_1 of M
  std::vector<double> penalties;  // realized penalty schedule
};

// Penalized data-fit objective
//   value = 0.5 |forward(H M^T) - yhat|^2 + (penalty/2) (|H|_F^2 + |M|_F^2)
// with gradients grad_H = G M + penalty*H, grad_M = G^T H + penalty*M, where
// G is the adjoint of the forward map applied to the residual.  Gradients are
// computed in the Fourier domain without forming G.  Throws on non-finite
// values.
double penalized_objective(const MeasurementOp& op, const CMatX& yhat,
                           const Eigen::Ref<const MatX>& H, const Eigen::Ref<const MatX>& M,
                           double penalty, MatX& grad_H, MatX& grad_M);

// Gaussian-initialized penalty-continuation solve of the lifted problem.
SolveReport solve_blind_deconv(const MeasurementOp& op, const CMatX& yhat,
                               const SolverConfig& cfg = {});

// Leading singular triple (u, v, sigma) of H M^T via QR of the thin factors;
// never materializes the L x (K*N) product.
struct Rank1 {
  VecX u;
  VecX v;
  double sigma = 0.0;
};
Rank1 leading_rank1(const MatX& H, const MatX& M);

// sigma_2/sigma_1 of a thin matrix (0 when it has a single column).
double sigma_ratio(const MatX& A);

// Scale/sign alignment of a recovered factor pair against the truth:
// picks the product sign s minimizing |s u v^T - h m^T|_F, reports
// alpha = s <u,h>/|u|^2 (the least-squares scale for s u against h) and the
// scale-free lifted error |s u v^T - h m^T|_F, all without forming outer
// products.  A zero recovered pair yields error |h m^T|_F.
struct Alignment {
  double alpha = 0.0;
  double error = 0.0;
};
Alignment align_scale(const VecX& u, const VecX& v, const VecX& h_true, const VecX& m_true);

// |sigma u v^T - h m^T|_F without forming the outer products (u, v unit).
double rank1_error(double sigma, const VecX& u, const VecX& v, const VecX& h,
                   const VecX& m);

// Success iff the lifted error is at or below the threshold; the threshold is
// absolute by default, or relative to |X0|_F when relative = true.
bool classify_recovery(const Eigen::Ref<const MatX>& Xhat, const Eigen::Ref<const MatX>& X0,
                       double threshold = 1e-1, bool relative = false);
bool classify_recovery(double lifted_error, double truth_norm, double threshold = 1e-1,
                       bool relative = false);

}  // namespace mdc
