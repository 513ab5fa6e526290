#include "multidecon/solver.hpp"

#include <cmath>
#include <stdexcept>

#include "multidecon/rng.hpp"
#include "multidecon/spectral.hpp"

namespace mdc {

double penalized_objective(const MeasurementOp& op, const CMatX& yhat,
                           const Eigen::Ref<const MatX>& H, const Eigen::Ref<const MatX>& M,
                           double penalty, MatX& grad_H, MatX& grad_M) {
  const Index L = op.L, K = op.K, N = op.N;
  const Index R = H.cols();
  if (H.rows() != L || M.rows() != K * N || M.cols() != R)
    throw std::invalid_argument("penalized_objective: factor shapes disagree");
  if (yhat.rows() != L || yhat.cols() != N)
    throw std::invalid_argument("penalized_objective: yhat must be L x N");

  const double root_l = std::sqrt(static_cast<double>(L));
  const CMatX Hhat =
      op.identity_basis_w() ? dft_cols(H) : dft_cols(MatX(op.basis_w * H));

  // Forward pass: keep each input's Fourier factor for the gradient.
  std::vector<CMatX> phat(static_cast<std::size_t>(N));
  CMatX resid(L, N);
  for (Index n = 0; n < N; ++n) {
    const MatX prod = op.bases_x[static_cast<std::size_t>(n)] * M.middleRows(n * K, K);
    phat[static_cast<std::size_t>(n)] = root_l * dft_cols(prod);
    resid.col(n) =
        (Hhat.array() * phat[static_cast<std::size_t>(n)].array()).rowwise().sum().matrix() -
        yhat.col(n);
  }

  const double value = 0.5 * resid.squaredNorm() +
                       0.5 * penalty * (H.squaredNorm() + M.squaredNorm());

  // grad_H[:, r] = B^T Re( F sum_n conj(resid_n) .* phat_n[:, r] ).
  CMatX acc = CMatX::Zero(L, R);
  grad_M.resize(K * N, R);
  for (Index n = 0; n < N; ++n) {
    const auto rn = resid.col(n).conjugate();
    acc.array() += phat[static_cast<std::size_t>(n)].array().colwise() * rn.array();
    // grad_M_n = sqrt(L) C_n^T Re( F (conj(resid_n) .* Hhat) ).
    const CMatX weighted = rn.asDiagonal() * Hhat;
    grad_M.middleRows(n * K, K) =
        root_l * op.bases_x[static_cast<std::size_t>(n)].transpose() *
            dft_cols(weighted).real() +
        penalty * M.middleRows(n * K, K);
  }
  const MatX spectral_part = dft_cols(acc).real();
  if (op.identity_basis_w())
    grad_H = spectral_part + penalty * H;
  else
    grad_H = op.basis_w.transpose() * spectral_part + penalty * H;

  if (!std::isfinite(value) || !grad_H.allFinite() || !grad_M.allFinite())
    throw std::runtime_error("penalized_objective: non-finite value or gradient");
  return value;
}

SolveReport solve_blind_deconv(const MeasurementOp& op, const CMatX& yhat,
                               const SolverConfig& cfg) {
  const Index L = op.L, K = op.K, N = op.N, R = cfg.rank;
  if (R < 1) throw std::invalid_argument("solve_blind_deconv: rank must be >= 1");
  if (cfg.rounds < 1) throw std::invalid_argument("solve_blind_deconv: rounds must be >= 1");
  if (yhat.rows() != L || yhat.cols() != N)
    throw std::invalid_argument("solve_blind_deconv: yhat must be L x N");

  const Index nh = L * R, nm = K * N * R;
  const double y_sq = yhat.squaredNorm();
  const double grad_tol = cfg.grad_tol * std::max(1.0, std::sqrt(y_sq));

  // Flat variable layout: [vec(H); vec(M)].
  VecX z(nh + nm);
  {
    Rng rng = Rng(cfg.seed).fork(0x1417);
    const double stddev = std::pow(static_cast<double>(L) * static_cast<double>(R), -0.25);
    z.head(nh) = stddev * rng.normal_vec(nh);
    z.tail(nm) = stddev * rng.normal_vec(nm);
  }

  SolveReport report;
  report.penalties.reserve(static_cast<std::size_t>(cfg.rounds));
  const double ratio =
      (cfg.rounds > 1)
          ? std::pow(cfg.penalty_final / cfg.penalty_init, 1.0 / (cfg.rounds - 1))
          : 1.0;

  MatX gH(L, R), gM(K * N, R);
  LbfgsResult last;
  for (int round = 0; round < cfg.rounds; ++round) {
    const double penalty =
        std::max(y_sq, 1e-300) * cfg.penalty_init * std::pow(ratio, round);
    report.penalties.push_back(penalty);

    const ObjectiveFn objective = [&](const VecX& x, VecX& grad) {
      const Eigen::Map<const MatX> H(x.data(), L, R);
      const Eigen::Map<const MatX> M(x.data() + nh, K * N, R);
      const double value = penalized_objective(op, yhat, H, M, penalty, gH, gM);
      grad.resize(x.size());
      Eigen::Map<MatX>(grad.data(), L, R) = gH;
      Eigen::Map<MatX>(grad.data() + nh, K * N, R) = gM;
      return value;
    };

    LbfgsOptions opts;
    opts.max_iters = cfg.max_iters_per_round;
    opts.memory = cfg.memory;
    opts.grad_tol = grad_tol;
    opts.wolfe_c1 = cfg.wolfe_c1;
    opts.wolfe_c2 = cfg.wolfe_c2;
    opts.max_line_search = cfg.max_line_search;

    last = lbfgs_minimize(objective, z, opts);
    z = last.x;
    report.iterations += last.iterations;
    report.evaluations += last.evaluations;
  }

  report.factors.H = Eigen::Map<const MatX>(z.data(), L, R);
  report.factors.M = Eigen::Map<const MatX>(z.data() + nh, K * N, R);
  report.objective = last.value;
  report.grad_norm = last.grad_norm;
  report.converged = last.converged;
  report.residual =
      (forward_factored(op, report.factors.H, report.factors.M) - yhat).norm();
  report.sigma_ratio_h = sigma_ratio(report.factors.H);
  report.sigma_ratio_m = sigma_ratio(report.factors.M);
  return report;
}

Rank1 leading_rank1(const MatX& H, const MatX& M) {
  Rank1 out;
  const Index R = H.cols();
  if (M.cols() != R) throw std::invalid_argument("leading_rank1: rank mismatch");
  if (H.size() == 0 || M.size() == 0 || H.norm() == 0.0 || M.norm() == 0.0) {
    out.u = VecX::Zero(H.rows());
    out.v = VecX::Zero(M.rows());
    return out;
  }
  // H M^T = Qh (Rh Rm^T) Qm^T with thin QR factors; the inner product is R x R.
  Eigen::HouseholderQR<MatX> qh(H), qm(M);
  const MatX rh = qh.matrixQR().topRows(R).triangularView<Eigen::Upper>();
  const MatX rm = qm.matrixQR().topRows(R).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<MatX> svd(rh * rm.transpose(),
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  MatX qh_thin = MatX::Identity(H.rows(), R);
  qh_thin = qh.householderQ() * qh_thin;
  MatX qm_thin = MatX::Identity(M.rows(), R);
  qm_thin = qm.householderQ() * qm_thin;
  out.sigma = svd.singularValues()[0];
  out.u = qh_thin * svd.matrixU().col(0);
  out.v = qm_thin * svd.matrixV().col(0);
  return out;
}

double sigma_ratio(const MatX& A) {
  if (A.cols() < 2) return 0.0;
  Eigen::JacobiSVD<MatX> svd(A);
  const auto& s = svd.singularValues();
  return (s[0] > 0.0) ? s[1] / s[0] : 0.0;
}

Alignment align_scale(const VecX& u, const VecX& v, const VecX& h_true, const VecX& m_true) {
  if (h_true.norm() == 0.0 || m_true.norm() == 0.0)
    throw std::invalid_argument("align_scale: zero ground truth");
  Alignment out;
  const double uu = u.squaredNorm(), vv = v.squaredNorm();
  const double hh = h_true.squaredNorm(), mm = m_true.squaredNorm();
  if (uu == 0.0 || vv == 0.0) {
    out.alpha = 0.0;
    out.error = std::sqrt(hh * mm);
    return out;
  }
  const double uh = u.dot(h_true), vm = v.dot(m_true);
  const double sign = (uh * vm >= 0.0) ? 1.0 : -1.0;
  out.alpha = sign * uh / uu;
  const double err_sq = uu * vv + hh * mm - 2.0 * sign * uh * vm;
  out.error = std::sqrt(std::max(0.0, err_sq));
  return out;
}

double rank1_error(double sigma, const VecX& u, const VecX& v, const VecX& h,
                   const VecX& m) {
  const double err_sq = sigma * sigma * u.squaredNorm() * v.squaredNorm() +
                        h.squaredNorm() * m.squaredNorm() -
                        2.0 * sigma * u.dot(h) * v.dot(m);
  return std::sqrt(std::max(0.0, err_sq));
}

bool classify_recovery(const Eigen::Ref<const MatX>& Xhat, const Eigen::Ref<const MatX>& X0,
                       double threshold, bool relative) {
  if (Xhat.rows() != X0.rows() || Xhat.cols() != X0.cols())
    throw std::invalid_argument("classify_recovery: shape mismatch");
  return classify_recovery((Xhat - X0).norm(), X0.norm(), threshold, relative);
}

bool classify_recovery(double lifted_error, double truth_norm, double threshold,
                       bool relative) {
  if (threshold <= 0.0) throw std::invalid_argument("classify_recovery: threshold <= 0");
  const double bound = relative ? threshold * truth_norm : threshold;
  return lifted_error <= bound;
}

}  // namespace mdc
