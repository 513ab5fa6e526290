#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "multidecon/types.hpp"

namespace mdc {

// Linear map taking an L x (K*N) matrix X to the L x N table of lifted
// measurements
//
//   forward(X)[l, n] = sqrt(L) * (F B)[l, :] * X_n * ((F C_n)[l, :])^T ,
//
// where X_n is the n-th L x K column block of X, B is a real orthonormal
// L x L basis for the shared filter and C_n is the real L x K basis of the
// n-th input.  For rank-one X = h m^T this reproduces the spectra of the
// circular convolutions (B h) (*) (C_n m_n).
struct MeasurementOp {
  Index L = 0;
  Index K = 0;
  Index N = 0;

  MatX basis_w;               // L x L orthonormal; empty means identity
  std::vector<MatX> bases_x;  // N matrices, each L x K

  // Caches (optional): fourier_w = F * B, rows_x[n] = sqrt(L) * F * C_n.
  // Row l of rows_x[n] is the diversity atom paired with measurement (l, n).
  CMatX fourier_w;
  std::vector<CMatX> rows_x;

  [[nodiscard]] bool identity_basis_w() const { return basis_w.size() == 0; }
  [[nodiscard]] bool cached() const { return !rows_x.empty(); }
};

// A sorted-or-not list of measurement indices (l, n).
using MeasIndex = std::pair<Index, Index>;

// Validates shapes (and orthonormality of basis_w when given) and optionally
// precomputes the Fourier-domain caches.  Pass cache_rows = false for large
// throwaway instances; row accessors then recompute on the fly.
MeasurementOp build_measurement_op(std::vector<MatX> bases_x, MatX basis_w = MatX(),
                                   bool cache_rows = true);

// Row l of F*B (length L) and sqrt(L)*F*C_n (length K), from cache or
// recomputed on demand.
CVecX filter_row(const MeasurementOp& op, Index l);
CVecX input_row(const MeasurementOp& op, Index l, Index n);

// Full forward map; X is L x (K*N), real or complex.
CMatX forward(const MeasurementOp& op, const Eigen::Ref<const MatX>& X);
CMatX forward(const MeasurementOp& op, const Eigen::Ref<const CMatX>& X);

// Forward map of the rank-R product H M^T without forming it; H is L x R and
// M is (K*N) x R.  Costs O(R (N + 1)) FFTs plus O(N L K R) flops.
CMatX forward_factored(const MeasurementOp& op, const Eigen::Ref<const MatX>& H,
                       const Eigen::Ref<const MatX>& M);

// Adjoint with respect to the real trace inner product on X: for real X and
// any complex U,  Re<forward(X), U> = <X, adjoint(U)>.
MatX adjoint(const MeasurementOp& op, const Eigen::Ref<const CMatX>& U);

// Adjoint with respect to the complex trace inner product <X, Y> = tr(Y^* X):
// <forward(X), U> = <X, adjoint_complex(U)> for complex X and U.  The real
// adjoint above is its entrywise real part.
CMatX adjoint_complex(const MeasurementOp& op, const Eigen::Ref<const CMatX>& U);

// Forward map restricted to a subset of measurement indices.
CVecX forward_subset(const MeasurementOp& op, const Eigen::Ref<const CMatX>& X,
                     const std::vector<MeasIndex>& subset);
CVecX forward_subset(const MeasurementOp& op, const Eigen::Ref<const MatX>& X,
                     const std::vector<MeasIndex>& subset);

// Adjoint of forward_subset (same real inner product convention).
MatX adjoint_subset(const MeasurementOp& op, const std::vector<MeasIndex>& subset,
                    const Eigen::Ref<const CVecX>& u);

// Complex-inner-product adjoint of forward_subset: embeds the coefficients at
// their (l, n) slots and applies adjoint_complex.
CMatX adjoint_subset_complex(const MeasurementOp& op, const std::vector<MeasIndex>& subset,
                             const Eigen::Ref<const CVecX>& u);

// Operator norm of the forward map on real matrices.  The measurement atoms
// b_l c_{l,n}^H live on disjoint column blocks across n and are orthogonal
// across l (F is unitary, B orthogonal), so the norm is attained by the
// largest atom: max_{l,n} |input_row(l, n)|.
double operator_norm(const MeasurementOp& op);

// Reference implementation: power iteration on adjoint(forward(.)).
double operator_norm_power(const MeasurementOp& op, int max_iters = 500,
                           double tol = 1e-12, std::uint64_t seed = 7);

}  // namespace mdc
