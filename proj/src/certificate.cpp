#include "multidecon/certificate.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "multidecon/spectral.hpp"

namespace mdc {

namespace {

void check_support_indices(const std::vector<Index>& omega, Index L) {
  Index prev = -1;
  for (Index l : omega) {
    if (l < 0 || l >= L) throw std::invalid_argument("support index out of range");
    if (l <= prev) throw std::invalid_argument("support must be sorted and duplicate-free");
    prev = l;
  }
}

template <typename Scalar>
Mat<Scalar> project_p_impl(const Eigen::Ref<const Mat<Scalar>>& Z,
                           const std::vector<Index>& omega) {
  check_support_indices(omega, Z.rows());
  Mat<Scalar> out = Mat<Scalar>::Zero(Z.rows(), Z.cols());
  for (Index l : omega) out.row(l) = Z.row(l);
  return out;
}

template <typename Scalar>
Mat<Scalar> project_r_impl(const ProjectorContext& ctx,
                           const Eigen::Ref<const Mat<Scalar>>& Z) {
  if (Z.rows() != ctx.h.size() || Z.cols() != ctx.m.size())
    throw std::invalid_argument("project_R: Z must be L x (K*N)");
  const Vec<Scalar> h = ctx.h.template cast<Scalar>();
  const Vec<Scalar> m = ctx.m.template cast<Scalar>();
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> q = h.transpose() * Z;  // h^T Z
  const Vec<Scalar> v = Z * m;                                           // Z m
  const Scalar s = q * m;                                                // h^T Z m
  // P(Z m m^T) - h h^T Z m m^T has the omega-supported column factor
  // P(v) - s h; h itself is omega-supported.
  Vec<Scalar> col = Vec<Scalar>::Zero(v.size());
  for (Index l : ctx.omega) col[l] = v[l];
  col -= s * h;
  Mat<Scalar> out = h * q;
  out.noalias() += col * m.transpose();
  return out;
}

}  // namespace

ProjectorContext make_projector_context(VecX h, VecX m, std::vector<Index> omega) {
  if (h.size() == 0 || m.size() == 0)
    throw std::invalid_argument("make_projector_context: empty factor");
  check_support_indices(omega, h.size());
  const double hn = h.norm(), mn = m.norm();
  if (!(hn > 0.0) || !(mn > 0.0))
    throw std::invalid_argument("make_projector_context: degenerate zero factor");
  h /= hn;
  m /= mn;
  VecX off = h;
  for (Index l : omega) off[l] = 0.0;
  if (off.lpNorm<Eigen::Infinity>() > 1e-12)
    throw std::invalid_argument("make_projector_context: h has mass off the support");
  ProjectorContext ctx;
  ctx.hh = h * h.transpose();
  ctx.mm = m * m.transpose();
  ctx.h = std::move(h);
  ctx.m = std::move(m);
  ctx.omega = std::move(omega);
  return ctx;
}

MatX project_P(const Eigen::Ref<const MatX>& Z, const std::vector<Index>& omega) {
  return project_p_impl<double>(Z, omega);
}

CMatX project_P(const Eigen::Ref<const CMatX>& Z, const std::vector<Index>& omega) {
  return project_p_impl<cplx>(Z, omega);
}

MatX project_R(const ProjectorContext& ctx, const Eigen::Ref<const MatX>& Z) {
  return project_r_impl<double>(ctx, Z);
}

CMatX project_R(const ProjectorContext& ctx, const Eigen::Ref<const CMatX>& Z) {
  return project_r_impl<cplx>(ctx, Z);
}

MatX project_R_perp(const ProjectorContext& ctx, const Eigen::Ref<const MatX>& Z) {
  return Z - project_R(ctx, Z);
}

CMatX project_R_perp(const ProjectorContext& ctx, const Eigen::Ref<const CMatX>& Z) {
  return Z - project_R(ctx, Z);
}

CMatX apply_support_inverse(const SOperators& s_ops, Index p,
                            const Eigen::Ref<const CMatX>& X) {
  if (p < 0 || p >= s_ops.P) throw std::invalid_argument("round index out of range");
  if (X.rows() != s_ops.L || s_ops.N <= 0 || X.cols() % s_ops.N != 0)
    throw std::invalid_argument("apply_support_inverse: X must be L x (K*N)");
  const Index K = X.cols() / s_ops.N;
  const Index S = s_ops.S();
  CMatX out = CMatX::Zero(X.rows(), X.cols());
  CMatX gathered(S, K);
  for (Index n = 0; n < s_ops.N; ++n) {
    for (Index i = 0; i < S; ++i)
      gathered.row(i) = X.block(s_ops.omega[static_cast<std::size_t>(i)], n * K, 1, K);
    const CMatX solved = s_ops.block_inv(n, p) * gathered;
    for (Index i = 0; i < S; ++i)
      out.block(s_ops.omega[static_cast<std::size_t>(i)], n * K, 1, K) = solved.row(i);
  }
  return out;
}

std::vector<MeasIndex> round_subset(const GolfingPartition& partition, Index p) {
  if (p < 0 || p >= partition.P) throw std::invalid_argument("round index out of range");
  std::vector<MeasIndex> subset;
  subset.reserve(static_cast<std::size_t>(partition.Q * partition.N));
  for (Index n = 0; n < partition.N; ++n)
    for (Index l : partition.block(n, p)) subset.emplace_back(l, n);
  return subset;
}

InjectivityReport injectivity_from_gram(const CMatX& gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0)
    throw std::invalid_argument("injectivity_from_gram: square non-empty matrix required");
  Eigen::SelfAdjointEigenSolver<CMatX> es(gram);
  InjectivityReport report;
  report.dim = gram.rows();
  report.lambda_min = es.eigenvalues()(0);
  report.gram_deviation = std::max(std::abs(es.eigenvalues()(0) - 1.0),
                                   std::abs(es.eigenvalues()(gram.rows() - 1) - 1.0));
  report.margin = report.lambda_min > 0.0
                      ? 1.0 / std::sqrt(2.0 * report.lambda_min)
                      : std::numeric_limits<double>::infinity();
  return report;
}

InjectivityReport injectivity_margin(const ProjectorContext& ctx, const MeasurementOp& op) {
  if (ctx.h.size() != op.L || ctx.m.size() != op.K * op.N)
    throw std::invalid_argument("injectivity_margin: context/operator shape mismatch");
  const Index L = op.L, K = op.K, N = op.N;
  const Index S = static_cast<Index>(ctx.omega.size());
  const Index dim = K * N + S - 1;
  const double root_l = std::sqrt(static_cast<double>(L));

  // Orthonormal tangent basis: { h e_j^T } for all K*N coordinates and
  // { u_i m^T } with the u_i an orthonormal complement of h inside the
  // support. The first family measures within one output column each, so its
  // Gram is block-diagonal; only the u_i m^T atoms couple all columns.
  const CVecX bh = dft(op.identity_basis_w() ? ctx.h : VecX(op.basis_w * ctx.h));
  MatX u_embedded(L, S - 1);
  if (S > 1) {
    VecX h_omega(S);
    for (Index i = 0; i < S; ++i) h_omega[i] = ctx.h[ctx.omega[static_cast<std::size_t>(i)]];
    const Eigen::HouseholderQR<MatX> qr{MatX(h_omega)};
    const MatX full = qr.householderQ() * MatX::Identity(S, S);
    u_embedded.setZero();
    for (Index i = 0; i < S; ++i)
      u_embedded.row(ctx.omega[static_cast<std::size_t>(i)]) = full.row(i).tail(S - 1);
  }
  CMatX bu(L, S - 1);
  for (Index i = 0; i + 1 < S; ++i)
    bu.col(i) = dft(op.identity_basis_w() ? VecX(u_embedded.col(i))
                                          : VecX(op.basis_w * u_embedded.col(i)));

  CMatX gram = CMatX::Zero(dim, dim);
  const VecX bh_sq = bh.cwiseAbs2();
  CMatX g(L, N);  // g(:, n) = rows_n m_n, the measured spectrum of input n
  for (Index n = 0; n < N; ++n) {
    const CMatX& rows = op.cached()
                            ? op.rows_x[static_cast<std::size_t>(n)]
                            : CMatX(root_l * dft_cols(op.bases_x[static_cast<std::size_t>(n)]));
    g.col(n) = rows * ctx.m.segment(n * K, K);
    gram.block(n * K, n * K, K, K) = rows.adjoint() * bh_sq.asDiagonal() * rows;
    for (Index i = 0; i + 1 < S; ++i) {
      const CVecX w = bh.conjugate().cwiseProduct(bu.col(i)).cwiseProduct(g.col(n));
      gram.block(n * K, K * N + i, K, 1) = rows.adjoint() * w;
      gram.block(K * N + i, n * K, 1, K) = gram.block(n * K, K * N + i, K, 1).adjoint();
    }
  }
  if (S > 1) {
    const VecX g_energy = g.cwiseAbs2().rowwise().sum();
    gram.block(K * N, K * N, S - 1, S - 1) = bu.adjoint() * g_energy.asDiagonal() * bu;
  }
  return injectivity_from_gram(gram);
}

OptimalityMargins verify_optimality(const ProjectorContext& ctx, const MeasurementOp& op,
                                    const Eigen::Ref<const CMatX>& Y, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("verify_optimality: gamma must be positive");
  if (Y.rows() != op.L || Y.cols() != op.K * op.N)
    throw std::invalid_argument("verify_optimality: Y must be L x (K*N)");
  const CMatX in_space = project_R(ctx, Y);
  const CMatX truth = (ctx.h * ctx.m.transpose()).cast<cplx>();

  OptimalityMargins margins;
  margins.gamma = gamma;
  margins.frobenius_margin = 4.0 * gamma * (truth - in_space).norm();
  const CMatX perp = Y - in_space;
  Eigen::SelfAdjointEigenSolver<CMatX> es(perp.adjoint() * perp);
  const double top = std::max(0.0, es.eigenvalues()(perp.cols() - 1));
  margins.spectral_margin = 2.0 * std::sqrt(top);
  margins.injectivity = injectivity_margin(ctx, op);
  margins.pass = std::isfinite(margins.frobenius_margin) &&
                 std::isfinite(margins.spectral_margin) && margins.frobenius_margin <= 1.0 &&
                 margins.spectral_margin <= 1.0 && margins.injectivity.margin <= 1.0;
  return margins;
}

double operator_norm_bound(Index L, Index K, Index N, double beta) {
  const double log_ln = std::log(static_cast<double>(L) * static_cast<double>(N));
  if (!(log_ln > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(beta * static_cast<double>(K) * log_ln);
}

bool CertificateTrace::strictly_decreasing() const {
  if (w_norms.size() < 2) return false;
  for (std::size_t i = 1; i < w_norms.size(); ++i)
    if (!(w_norms[i] < w_norms[i - 1])) return false;
  return true;
}

CertificateTrace golfing_certificate(const ProjectorContext& ctx, const MeasurementOp& op,
                                     const GolfingPartition& partition, const SOperators& s_ops,
                                     std::vector<CMatX>* w_iterates) {
  if (!partition.valid()) throw std::invalid_argument("golfing_certificate: invalid partition");
  if (op.L != partition.L || op.N != partition.N)
    throw std::invalid_argument("golfing_certificate: operator/partition shape mismatch");
  if (s_ops.L != partition.L || s_ops.N != partition.N || s_ops.P != partition.P)
    throw std::invalid_argument("golfing_certificate: support operators do not match partition");
  if (s_ops.omega != ctx.omega)
    throw std::invalid_argument("golfing_certificate: context support differs from block support");
  if (ctx.h.size() != op.L || ctx.m.size() != op.K * op.N)
    throw std::invalid_argument("golfing_certificate: context/operator shape mismatch");

  const double scale = static_cast<double>(partition.L) / static_cast<double>(partition.Q);
  const CMatX truth = (ctx.h * ctx.m.transpose()).cast<cplx>();
  CMatX Y = CMatX::Zero(op.L, op.K * op.N);
  CMatX W = -truth;

  CertificateTrace trace;
  trace.w_norms.reserve(static_cast<std::size_t>(partition.P) + 1);
  trace.w_norms.push_back(W.norm());
  if (w_iterates) {
    w_iterates->clear();
    w_iterates->push_back(W);
  }
  for (Index p = 0; p < partition.P; ++p) {
    const CMatX target = p == 0 ? CMatX(scale * truth)
                                : apply_support_inverse(s_ops, p, CMatX(-W));
    const auto subset = round_subset(partition, p);
    const CVecX meas = forward_subset(op, target, subset);
    Y += adjoint_subset_complex(op, subset, meas);
    W = project_R(ctx, Y) - truth;
    trace.w_norms.push_back(W.norm());
    if (w_iterates) w_iterates->push_back(W);
  }
  trace.Y = std::move(Y);
  return trace;
}

IterateCoherences iterate_coherences(const ProjectorContext& ctx,
                                     const GolfingPartition& partition, const SOperators& s_ops,
                                     const Eigen::Ref<const CMatX>& W, Index p, double mu0) {
  if (s_ops.L != partition.L || s_ops.N != partition.N || s_ops.P != partition.P)
    throw std::invalid_argument("iterate_coherences: support operators do not match partition");
  if (W.rows() != partition.L || W.cols() != ctx.m.size() ||
      W.cols() % partition.N != 0)
    throw std::invalid_argument("iterate_coherences: W must be L x (K*N)");
  const Index L = partition.L, N = partition.N, Q = partition.Q;
  const Index K = W.cols() / N;
  const Index S = s_ops.S();

  double max_share = 0.0;
  for (Index n = 0; n < N; ++n)
    max_share = std::max(max_share, ctx.m.segment(n * K, K).squaredNorm());
  const double rho0 = std::sqrt(static_cast<double>(N) * max_share);

  IterateCoherences out;
  if (p < 0 || p >= partition.P) return out;

  const double q_over_l = static_cast<double>(Q) / static_cast<double>(L);
  double max_sum = 0.0, max_single = 0.0, prev_round_total = 0.0;
  CMatX gathered(S, K);
  for (Index n = 0; n < N; ++n) {
    for (Index i = 0; i < S; ++i)
      gathered.row(i) = W.block(s_ops.omega[static_cast<std::size_t>(i)], n * K, 1, K);
    const CMatX solved = s_ops.block_inv(n, p) * gathered;  // S x K
    double sum = 0.0;
    for (Index l : partition.block(n, p)) {
      const double sq = (s_ops.fourier_cols.row(l) * solved).squaredNorm();
      sum += sq;
      max_single = std::max(max_single, sq);
    }
    max_sum = std::max(max_sum, sum);
    if (p >= 1) {
      double prev_max = 0.0;
      for (Index l : partition.block(n, p - 1))
        prev_max = std::max(prev_max, (s_ops.fourier_cols.row(l) * solved).squaredNorm());
      prev_round_total += prev_max;
    }
  }
  out.rho = std::sqrt(q_over_l * static_cast<double>(N) * max_sum);
  out.nu = std::sqrt(q_over_l * static_cast<double>(Q * N) * max_single);
  out.rho_target = std::pow(2.0, -static_cast<double>(p)) * std::sqrt(q_over_l) * rho0;
  out.nu_target = std::pow(2.0, -static_cast<double>(p) + 3.0) * mu0 * rho0;
  if (p >= 1) {
    out.mu = std::sqrt(q_over_l * static_cast<double>(Q) * prev_round_total);
    out.mu_target = std::pow(2.0, -static_cast<double>(p) + 2.0) * mu0;
  }
  return out;
}

Index default_rounds(Index L, Index K, Index N, Index S, double beta) {
  if (L <= 0 || K <= 0 || N <= 0 || S <= 0)
    throw std::invalid_argument("default_rounds: dimensions must be positive");
  const double log_ln = std::log(static_cast<double>(L) * static_cast<double>(N));
  Index p = 1;
  if (log_ln > 0.0) {
    const double arg = 4.0 * beta * static_cast<double>(K) * log_ln;
    if (arg > 1.0)
      p = static_cast<Index>(std::ceil(0.5 * std::log2(arg)));
  }
  p = std::min(p, L / S);
  return std::max<Index>(p, 1);
}

}  // namespace mdc
