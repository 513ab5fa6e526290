#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "multidecon/types.hpp"

namespace mdc {

/// Random partition family used by the golfing certificate: for every input
/// index n, the row set {0, ..., L-1} is split uniformly at random into P
/// disjoint blocks of equal size Q = L / P, independently across inputs.
struct GolfingPartition {
  Index L{0};
  Index N{0};
  Index P{0};
  Index Q{0};
  std::uint64_t seed{0};
  /// delta[n][p] holds the p-th block for input n, sorted ascending.
  std::vector<std::vector<std::vector<Index>>> delta;

  const std::vector<Index>& block(Index n, Index p) const {
    return delta.at(static_cast<std::size_t>(n)).at(static_cast<std::size_t>(p));
  }

  /// The p-th round of the certificate touches the pairs (delta[n][p], n)
  /// for every n; this materializes that derived view.
  std::vector<std::pair<const std::vector<Index>*, Index>> round_blocks(Index p) const;

  /// True when every per-input family is a genuine partition of {0,...,L-1}
  /// into P sorted blocks of size Q.
  bool valid() const;
};

/// Smallest multiple of P that is >= L. Signals are zero-extended to this
/// length by callers when P does not divide L; the builder itself is strict.
Index padded_length(Index L, Index P);

/// Draw the per-input uniform partitions. Requires 1 <= P <= L and P | L.
GolfingPartition build_partition(Index L, Index N, Index P, std::uint64_t seed);

/// Support-restricted frame operators of the partitioned rows of the
/// Fourier-transformed basis. For each (n, p), the operator
///   sum over l in delta[n][p] of (P b_l)(P b_l)^*
/// is supported on omega x omega; only its |omega| x |omega| block is stored,
/// together with the explicitly inverted block and its eigenvalue range.
struct SOperators {
  Index L{0};
  Index N{0};
  Index P{0};
  std::vector<Index> omega;        ///< sorted support, size S
  CMatX fourier_cols;              ///< L x S: transforms of the support columns
  std::vector<CMatX> gram;         ///< [n * P + p]: S x S Hermitian PSD block
  std::vector<CMatX> gram_inv;     ///< [n * P + p]: explicit inverse of gram
  std::vector<double> min_eig;     ///< [n * P + p]
  std::vector<double> max_eig;     ///< [n * P + p]

  Index S() const { return static_cast<Index>(omega.size()); }
  Index Q() const { return L / P; }
  const CMatX& block(Index n, Index p) const {
    return gram[static_cast<std::size_t>(n * P + p)];
  }
  const CMatX& block_inv(Index n, Index p) const {
    return gram_inv[static_cast<std::size_t>(n * P + p)];
  }
  /// max over (n, p) of the spectral norm of the frame block.
  double max_norm() const;
  /// max over (n, p) of the spectral norm of the inverted block.
  double max_inv_norm() const;
  /// Checks the working eigenvalue window: every block norm <= 5Q/4L and
  /// every inverted-block norm <= 4L/3Q.
  bool eigen_bounds_ok() const;
};

/// Build the support-restricted frame operators for the given partition.
/// `basis` must be L x L real orthonormal; an empty matrix stands for the
/// standard basis. Requires |omega| <= Q; throws (naming the offending
/// (n, p) block) when a block is singular or has condition number > 1e12.
SOperators build_S(const GolfingPartition& partition, const MatX& basis,
                   const std::vector<Index>& omega);

/// max over (n, p) of the spectral norm of
///   sum over l in delta[n][p] of (P b_l)(P b_l)^*  minus  (Q/L) P
/// for the fixed support omega.
double rip_deviation(const GolfingPartition& partition, const MatX& basis,
                     const std::vector<Index>& omega);

/// Exhaustive variant of rip_deviation: the max over every support of the
/// given size. Intended as a slow oracle for small L; throws when the number
/// of supports exceeds 1e6.
double rip_deviation_uniform(const GolfingPartition& partition, const MatX& basis,
                             Index support_size);

/// Largest squared-modulus entry of the Fourier transform of the basis,
/// scaled by L. Lies in [1, L]: 1 for the standard basis (flat transform
/// rows), L when some basis column is frequency-concentrated.
/// Requires a square orthonormal basis.
double mu_max_sq(const MatX& basis);

/// Energy-spread factor of stacked input coefficients: N times the largest
/// per-input energy share. Equals 1 for equal energies and N when a single
/// input carries everything. Throws when all blocks are zero.
double rho0_sq(const std::vector<VecX>& m_blocks);

/// Diffusion measure of the expansion coefficients h together with its three
/// constituents (already scaled by L):
///   terms[0]: L * ||Bhat h||_inf^2 / ||h||^2
///   terms[1]: (Q^2/L^2) * L * max over (n,p) of ||Bhat inv(S_{n,p}) h||_inf^2 / ||h||^2
///   terms[2]: L * max over (n,n') of ||Bhat inv(S_{n,2}) S_{n',1} h||_inf^2 / ||h||^2
/// where Bhat is the Fourier transform of the basis. terms[2] needs at least
/// two partition rounds; with P == 1 it is reported as NaN and excluded from
/// the max. `value` is the max of the defined terms.
struct Mu0Breakdown {
  double value{0.0};
  std::array<double, 3> terms{};
};

/// Compute the diffusion measure for a length-L vector h supported on the
/// omega of `s_ops` (built with the same basis and partition).
Mu0Breakdown mu0_sq(const MatX& basis, const VecX& h,
                    const GolfingPartition& partition, const SOperators& s_ops);

/// Margins of the two sample-complexity conditions. Each margin is the ratio
/// (required quantity) / (available quantity); a value below 1 means the
/// corresponding hypothesis holds for the supplied constant. The absolute
/// constant enters as C * beta.
struct TheoremMargins {
  double alpha1{0.0};
  double alpha2{0.0};
  double log_ln{0.0};
  double l_margin{0.0};
  double n_margin{0.0};
  bool defined{false};

  bool satisfied() const { return defined && l_margin < 1.0 && n_margin < 1.0; }
};

/// Evaluate the margins with all derived logarithmic factors supplied
/// explicitly (the L-condition margin is then exactly linear in 1/L).
TheoremMargins theorem_margins_at(double alpha1, double alpha2, double log_ln,
                                  double L, double K, double N, double S,
                                  double mu0_sq, double mu_max_sq, double rho0_sq,
                                  double beta, double C);

/// Evaluate both sample-complexity margins from problem dimensions and
/// coherences, using alpha1 = log(K log(LN)) and alpha2 = log(S log(LN)).
/// When any log argument is <= 1 the regime is undefined: `defined` is false
/// and the margins are NaN.
TheoremMargins theorem_bound(double L, double K, double N, double S,
                             double mu0_sq, double mu_max_sq, double rho0_sq,
                             double beta = 4.0, double C = 1.0);

/// Aggregate of every coherence quantity for one instance, as surfaced by the
/// CLI coherence report.
struct CoherenceReport {
  double mu_max_sq{0.0};
  double rho0_sq{0.0};
  Mu0Breakdown mu0;
  double rip_deviation{0.0};
  TheoremMargins margins;
};

}  // namespace mdc
