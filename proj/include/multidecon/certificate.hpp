#pragma once

#include <limits>
#include <vector>

#include "multidecon/coherence.hpp"
#include "multidecon/lifting.hpp"
#include "multidecon/types.hpp"

namespace mdc {

/// Ground-truth context shared by the dual-certificate routines: the unit
/// rank-one factors of the lifted matrix h m^T, the filter support, and the
/// precomputed outer products used by the tangent-space projector.
struct ProjectorContext {
  VecX h;                    ///< length L, unit norm, supported on omega
  VecX m;                    ///< length K*N, unit norm
  std::vector<Index> omega;  ///< sorted support indices of h
  MatX hh;                   ///< h h^T
  MatX mm;                   ///< m m^T

  Index L() const { return h.size(); }
};

/// Normalize the factors and validate the support. Throws when either factor
/// is zero, when omega is not a sorted set of in-range indices, or when h
/// carries mass off omega.
ProjectorContext make_projector_context(VecX h, VecX m, std::vector<Index> omega);

/// Row-restriction projector: zeroes every row whose index is not in omega.
MatX project_P(const Eigen::Ref<const MatX>& Z, const std::vector<Index>& omega);
CMatX project_P(const Eigen::Ref<const CMatX>& Z, const std::vector<Index>& omega);

/// Orthogonal projector onto the tangent space
///   T = { h v^* + u m^* : u supported on omega },
/// computed as R(Z) = h h^T Z + P(Z m m^T) - h h^T Z m m^T.
MatX project_R(const ProjectorContext& ctx, const Eigen::Ref<const MatX>& Z);
CMatX project_R(const ProjectorContext& ctx, const Eigen::Ref<const CMatX>& Z);

/// Complementary projector R_perp(Z) = Z - R(Z).
MatX project_R_perp(const ProjectorContext& ctx, const Eigen::Ref<const MatX>& Z);
CMatX project_R_perp(const ProjectorContext& ctx, const Eigen::Ref<const CMatX>& Z);

/// Block-inverse step of the certificate iteration: for each input n, apply
/// the inverted support block of round p to the n-th column block,
///   out D_n = embed(inv(S_{n,p})) X D_n,
/// zeroing every row outside the support. X must be L x (K*N).
CMatX apply_support_inverse(const SOperators& s_ops, Index p,
                            const Eigen::Ref<const CMatX>& X);

/// Measurement indices touched by round p: (l, n) for every n and every l in
/// the p-th partition block of input n.
std::vector<MeasIndex> round_subset(const GolfingPartition& partition, Index p);

/// Injectivity check of the measurement operator on the tangent space. The
/// Gram matrix G of the restriction of the operator to an orthonormal basis
/// of T (dimension K*N + S - 1) determines
///   margin = max over unit Z in T of ||Z||_F / (sqrt(2) ||A(Z)||_F)
///          = 1 / sqrt(2 lambda_min(G)),
/// so margin <= 1 certifies ||A(Z)||_F >= ||Z||_F / sqrt(2) on T. Also
/// reports ||G - I||_2, the deviation of the restricted normal operator from
/// the identity on T.
struct InjectivityReport {
  double lambda_min{0.0};
  double gram_deviation{0.0};
  double margin{std::numeric_limits<double>::infinity()};
  Index dim{0};

  bool pass() const { return margin <= 1.0; }
};

/// Spectral analysis of an explicitly supplied tangent-frame Gram matrix.
InjectivityReport injectivity_from_gram(const CMatX& gram);

/// Build the tangent-frame Gram for the given instance and analyze it.
InjectivityReport injectivity_margin(const ProjectorContext& ctx, const MeasurementOp& op);

/// Margins of the dual-certificate optimality conditions. Each margin is the
/// measured quantity divided by its allowance, so values <= 1 mean the
/// condition holds:
///   frobenius_margin = 4 gamma ||h m^T - R(Y)||_F   (in-space closeness)
///   spectral_margin  = 2 ||Y - R(Y)||_2             (out-of-space smallness)
/// together with the injectivity report. `pass` requires all three <= 1.
struct OptimalityMargins {
  double frobenius_margin{std::numeric_limits<double>::quiet_NaN()};
  double spectral_margin{std::numeric_limits<double>::quiet_NaN()};
  InjectivityReport injectivity;
  double gamma{0.0};
  bool pass{false};
};

/// Evaluate the optimality margins of a dual candidate Y (L x K*N). `gamma`
/// must upper-bound the operator norm of the measurement map; the exact value
/// from operator_norm() is the tightest admissible choice.
OptimalityMargins verify_optimality(const ProjectorContext& ctx, const MeasurementOp& op,
                                    const Eigen::Ref<const CMatX>& Y, double gamma);

/// High-probability operator-norm bound sqrt(beta * K * log(L*N)), usable as
/// a data-independent gamma. NaN when log(L*N) <= 0.
double operator_norm_bound(Index L, Index K, Index N, double beta = 4.0);

/// Record of one golfing run: Frobenius norms of the in-space residual
/// W_p = R(Y_p) - h m^T for p = 0..P (entry 0 is 1 by normalization), the
/// final dual candidate, and — once verify_optimality has been run — its
/// margins.
struct CertificateTrace {
  std::vector<double> w_norms;
  CMatX Y;
  OptimalityMargins margins;

  Index rounds() const { return static_cast<Index>(w_norms.size()) - 1; }
  bool strictly_decreasing() const;
};

/// Iteratively build the dual certificate over the partition rounds:
///   Y_1 = (L/Q) A*_1 A_1 (h m^T),
///   Y_p = Y_{p-1} + A*_p A_p S-inv_p (h m^T - R(Y_{p-1})),  p >= 2,
/// where A_p is the restriction of the measurement map to round p and
/// S-inv_p the block-inverse step above. Requires ctx.omega to equal the
/// support of s_ops and the shapes of op/partition/s_ops to agree. When
/// `w_iterates` is given it receives W_0..W_P.
CertificateTrace golfing_certificate(const ProjectorContext& ctx, const MeasurementOp& op,
                                     const GolfingPartition& partition, const SOperators& s_ops,
                                     std::vector<CMatX>* w_iterates = nullptr);

/// Diagnostic coherences of a residual iterate W_p, together with the target
/// decay values they are compared against:
///   rho_p^2 = (Q/L) N max_n  sum over l in block(n,p) of ||b_l^* Sinv_{n,p} W_p D_n||^2
///   nu_p^2  = (Q^2/L) N max_n  max over l in block(n,p) of the same row norm
///   mu_p^2  = (Q^2/L) sum_n  max over l in block(n,p-1) of ||b_l^* Sinv_{n,p} W_p D_n||^2
/// (blocks indexed from 0; the mu row set comes from the previous round, so
/// mu is defined only for p >= 1; rho/nu require p <= P-1). Out-of-domain
/// values are NaN. Targets: 2^-p sqrt(Q/L) rho_0, 2^(-p+3) mu_0 rho_0,
/// 2^(-p+2) mu_0; the mu_0-dependent targets are NaN when mu_0 is not given.
struct IterateCoherences {
  double rho{std::numeric_limits<double>::quiet_NaN()};
  double nu{std::numeric_limits<double>::quiet_NaN()};
  double mu{std::numeric_limits<double>::quiet_NaN()};
  double rho_target{std::numeric_limits<double>::quiet_NaN()};
  double nu_target{std::numeric_limits<double>::quiet_NaN()};
  double mu_target{std::numeric_limits<double>::quiet_NaN()};
};

IterateCoherences iterate_coherences(const ProjectorContext& ctx,
                                     const GolfingPartition& partition, const SOperators& s_ops,
                                     const Eigen::Ref<const CMatX>& W, Index p,
                                     double mu0 = std::numeric_limits<double>::quiet_NaN());

/// Default number of golfing rounds, ceil(0.5 * log2(4 beta K log(L*N))),
/// clipped to [1, L/S] so that each block can still cover the support.
Index default_rounds(Index L, Index K, Index N, Index S, double beta = 4.0);

}  // namespace mdc
