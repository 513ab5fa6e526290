#include "multidecon/lifting.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "multidecon/rng.hpp"
#include "multidecon/spectral.hpp"

namespace mdc {

namespace {

void check_subset(const MeasurementOp& op, const std::vector<MeasIndex>& subset) {
  for (const auto& [l, n] : subset)
    if (l < 0 || l >= op.L || n < 0 || n >= op.N)
      throw std::out_of_range("measurement subset index (" + std::to_string(l) + ", " +
                              std::to_string(n) + ") out of range");
}

// Row l of the unitary DFT matrix.
CVecX fourier_row(Index L, Index l) {
  CVecX row(L);
  const double scale = 1.0 / std::sqrt(static_cast<double>(L));
  for (Index t = 0; t < L; ++t) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(l) *
                         static_cast<double>(t) / static_cast<double>(L);
    row[t] = scale * cplx(std::cos(angle), std::sin(angle));
  }
  return row;
}

template <typename Scalar>
CMatX forward_impl(const MeasurementOp& op, const Eigen::Ref<const Mat<Scalar>>& X) {
  if (X.rows() != op.L || X.cols() != op.K * op.N)
    throw std::invalid_argument("forward: X must be L x (K*N)");
  CMatX out(op.L, op.N);
  const double root_l = std::sqrt(static_cast<double>(op.L));
  for (Index n = 0; n < op.N; ++n) {
    const auto Xn = X.middleCols(n * op.K, op.K);
    // G = (F B) X_n, column-wise FFTs after the basis product.
    CMatX Xc = Xn.template cast<cplx>();
    if (!op.identity_basis_w()) Xc = op.basis_w.template cast<cplx>() * Xc;
    const CMatX G = dft_cols(Xc);
    const CMatX& rows = op.cached() ? op.rows_x[static_cast<std::size_t>(n)]
                                    : CMatX(root_l * dft_cols(op.bases_x[static_cast<std::size_t>(n)]));
    out.col(n) = (G.array() * rows.array()).rowwise().sum();
  }
  return out;
}

}  // namespace

MeasurementOp build_measurement_op(std::vector<MatX> bases_x, MatX basis_w, bool cache_rows) {
  if (bases_x.empty()) throw std::invalid_argument("build_measurement_op: no input bases");
  MeasurementOp op;
  op.L = bases_x.front().rows();
  op.K = bases_x.front().cols();
  op.N = static_cast<Index>(bases_x.size());
  if (op.L < 1 || op.K < 1 || op.K > op.L)
    throw std::invalid_argument("build_measurement_op: need 1 <= K <= L");
  for (const MatX& c : bases_x)
    if (c.rows() != op.L || c.cols() != op.K)
      throw std::invalid_argument("build_measurement_op: inconsistent input basis shapes");
  if (basis_w.size() != 0) {
    if (basis_w.rows() != op.L || basis_w.cols() != op.L)
      throw std::invalid_argument("build_measurement_op: filter basis must be L x L");
    const double defect = (basis_w.transpose() * basis_w - MatX::Identity(op.L, op.L))
                              .cwiseAbs()
                              .maxCoeff();
    if (defect > 1e-8)
      throw std::invalid_argument("build_measurement_op: filter basis is not orthonormal");
  }
  op.basis_w = std::move(basis_w);
  op.bases_x = std::move(bases_x);
  if (cache_rows) {
    const double root_l = std::sqrt(static_cast<double>(op.L));
    op.rows_x.reserve(static_cast<std::size_t>(op.N));
    for (Index n = 0; n < op.N; ++n)
      op.rows_x.push_back(root_l * dft_cols(op.bases_x[static_cast<std::size_t>(n)]));
    if (op.identity_basis_w()) {
      op.fourier_w = dft_cols(MatX(MatX::Identity(op.L, op.L)));
    } else {
      op.fourier_w = dft_cols(op.basis_w);
    }
  }
  return op;
}

CVecX filter_row(const MeasurementOp& op, Index l) {
  if (l < 0 || l >= op.L) throw std::out_of_range("filter_row: index out of range");
  if (op.fourier_w.size() != 0) return op.fourier_w.row(l).transpose();
  const CVecX f = fourier_row(op.L, l);
  if (op.identity_basis_w()) return f;
  return (f.transpose() * op.basis_w.cast<cplx>()).transpose();
}

CVecX input_row(const MeasurementOp& op, Index l, Index n) {
  if (l < 0 || l >= op.L || n < 0 || n >= op.N)
    throw std::out_of_range("input_row: index out of range");
  if (op.cached()) return op.rows_x[static_cast<std::size_t>(n)].row(l).transpose();
  const double root_l = std::sqrt(static_cast<double>(op.L));
  const CVecX f = fourier_row(op.L, l);
  return root_l * (f.transpose() * op.bases_x[static_cast<std::size_t>(n)].cast<cplx>()).transpose();
}

CMatX forward(const MeasurementOp& op, const Eigen::Ref<const MatX>& X) {
  return forward_impl<double>(op, X);
}

CMatX forward(const MeasurementOp& op, const Eigen::Ref<const CMatX>& X) {
  return forward_impl<cplx>(op, X);
}

CMatX forward_factored(const MeasurementOp& op, const Eigen::Ref<const MatX>& H,
                       const Eigen::Ref<const MatX>& M) {
  const Index R = H.cols();
  if (H.rows() != op.L || M.rows() != op.K * op.N || M.cols() != R)
    throw std::invalid_argument("forward_factored: H must be L x R and M (K*N) x R");
  const double root_l = std::sqrt(static_cast<double>(op.L));
  const CMatX Hhat =
      op.identity_basis_w() ? dft_cols(H) : dft_cols(MatX(op.basis_w * H));
  CMatX out(op.L, op.N);
  for (Index n = 0; n < op.N; ++n) {
    const MatX prod = op.bases_x[static_cast<std::size_t>(n)] * M.middleRows(n * op.K, op.K);
    const CMatX phat = root_l * dft_cols(prod);
    out.col(n) = (Hhat.array() * phat.array()).rowwise().sum();
  }
  return out;
}

MatX adjoint(const MeasurementOp& op, const Eigen::Ref<const CMatX>& U) {
  if (U.rows() != op.L || U.cols() != op.N)
    throw std::invalid_argument("adjoint: U must be L x N");
  const double root_l = std::sqrt(static_cast<double>(op.L));
  MatX out(op.L, op.K * op.N);
  for (Index n = 0; n < op.N; ++n) {
    const CMatX& rows = op.cached() ? op.rows_x[static_cast<std::size_t>(n)]
                                    : CMatX(root_l * dft_cols(op.bases_x[static_cast<std::size_t>(n)]));
    const CMatX weighted = U.col(n).conjugate().asDiagonal() * rows;
    const MatX spectral_part = dft_cols(weighted).real();  // F^T = F
    if (op.identity_basis_w())
      out.middleCols(n * op.K, op.K) = spectral_part;
    else
      out.middleCols(n * op.K, op.K) = op.basis_w.transpose() * spectral_part;
  }
  return out;
}

CMatX adjoint_complex(const MeasurementOp& op, const Eigen::Ref<const CMatX>& U) {
  if (U.rows() != op.L || U.cols() != op.N)
    throw std::invalid_argument("adjoint_complex: U must be L x N");
  const double root_l = std::sqrt(static_cast<double>(op.L));
  CMatX basis_t;
  if (!op.identity_basis_w()) basis_t = op.basis_w.transpose().cast<cplx>();
  CMatX out(op.L, op.K * op.N);
  for (Index n = 0; n < op.N; ++n) {
    const CMatX& rows = op.cached() ? op.rows_x[static_cast<std::size_t>(n)]
                                    : CMatX(root_l * dft_cols(op.bases_x[static_cast<std::size_t>(n)]));
    const CMatX weighted = U.col(n).conjugate().asDiagonal() * rows;
    const CMatX spectral_part = dft_cols(weighted).conjugate();  // F^T = F
    if (op.identity_basis_w())
      out.middleCols(n * op.K, op.K) = spectral_part;
    else
      out.middleCols(n * op.K, op.K) = basis_t * spectral_part;
  }
  return out;
}

CVecX forward_subset(const MeasurementOp& op, const Eigen::Ref<const CMatX>& X,
                     const std::vector<MeasIndex>& subset) {
  if (X.rows() != op.L || X.cols() != op.K * op.N)
    throw std::invalid_argument("forward_subset: X must be L x (K*N)");
  check_subset(op, subset);
  CVecX out(static_cast<Index>(subset.size()));
  Index i = 0;
  for (const auto& [l, n] : subset) {
    const CVecX brow = filter_row(op, l);
    const CVecX crow = input_row(op, l, n);
    out[i++] = (brow.transpose() * X.middleCols(n * op.K, op.K) * crow).value();
  }
  return out;
}

CVecX forward_subset(const MeasurementOp& op, const Eigen::Ref<const MatX>& X,
                     const std::vector<MeasIndex>& subset) {
  return forward_subset(op, CMatX(X.cast<cplx>()), subset);
}

MatX adjoint_subset(const MeasurementOp& op, const std::vector<MeasIndex>& subset,
                    const Eigen::Ref<const CVecX>& u) {
  check_subset(op, subset);
  if (u.size() != static_cast<Index>(subset.size()))
    throw std::invalid_argument("adjoint_subset: coefficient count mismatch");
  MatX out = MatX::Zero(op.L, op.K * op.N);
  Index i = 0;
  for (const auto& [l, n] : subset) {
    const CVecX brow = filter_row(op, l);
    const CVecX crow = input_row(op, l, n);
    out.middleCols(n * op.K, op.K) +=
        (std::conj(u[i]) * brow * crow.transpose()).real();
    ++i;
  }
  return out;
}

CMatX adjoint_subset_complex(const MeasurementOp& op, const std::vector<MeasIndex>& subset,
                             const Eigen::Ref<const CVecX>& u) {
  check_subset(op, subset);
  if (u.size() != static_cast<Index>(subset.size()))
    throw std::invalid_argument("adjoint_subset_complex: coefficient count mismatch");
  CMatX embedded = CMatX::Zero(op.L, op.N);
  Index i = 0;
  for (const auto& [l, n] : subset) embedded(l, n) += u[i++];
  return adjoint_complex(op, embedded);
}

double operator_norm(const MeasurementOp& op) {
  double best = 0.0;
  for (Index n = 0; n < op.N; ++n) {
    if (op.cached()) {
      best = std::max(best, op.rows_x[static_cast<std::size_t>(n)].rowwise().norm().maxCoeff());
    } else {
      const double root_l = std::sqrt(static_cast<double>(op.L));
      const CMatX rows = root_l * dft_cols(op.bases_x[static_cast<std::size_t>(n)]);
      best = std::max(best, rows.rowwise().norm().maxCoeff());
    }
  }
  return best;
}

double operator_norm_power(const MeasurementOp& op, int max_iters, double tol,
                           std::uint64_t seed) {
  Rng rng(seed);
  MatX x = rng.normal_mat(op.L, op.K * op.N);
  x /= x.norm();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const MatX tx = adjoint(op, forward(op, x));
    const double next = (x.array() * tx.array()).sum();
    const double scale = tx.norm();
    if (scale == 0.0) return 0.0;
    x = tx / scale;
    if (it > 0 && std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(0.0, lambda));
}

}  // namespace mdc
