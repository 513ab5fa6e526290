#include "multidecon/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace mdc {

namespace {

// One FFT engine per thread; Eigen::FFT caches kissfft plans per length.
Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

void check_length(Index n, const char* who) {
  if (n <= 0) throw std::invalid_argument(std::string(who) + ": empty input");
}

}  // namespace

CVecX dft(const Eigen::Ref<const CVecX>& x) {
  check_length(x.size(), "dft");
  const Index n = x.size();
  if (n == 1) return x;  // the backend does not plan length-1 transforms
  CVecX in = x;  // kissfft wants contiguous storage it may not get from Ref
  CVecX out(n);
  // The pointer overload sidesteps a broken MatrixBase code path in the
  // bundled backend.
  fft_engine().fwd(out.data(), in.data(), static_cast<int>(n));
  out *= 1.0 / std::sqrt(static_cast<double>(n));
  return out;
}

CVecX dft(const Eigen::Ref<const VecX>& x) {
  check_length(x.size(), "dft");
  return dft(CVecX(x.cast<cplx>()));
}

CVecX idft(const Eigen::Ref<const CVecX>& x) {
  check_length(x.size(), "idft");
  const Index n = x.size();
  if (n == 1) return x;
  CVecX in = x;
  CVecX out(n);
  fft_engine().inv(out.data(), in.data(), static_cast<int>(n));  // scales by 1/n
  out *= std::sqrt(static_cast<double>(n));
  return out;
}

CMatX dft_cols(const Eigen::Ref<const CMatX>& m) {
  CMatX out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) out.col(j) = dft(CVecX(m.col(j)));
  return out;
}

CMatX dft_cols(const Eigen::Ref<const MatX>& m) {
  CMatX out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) out.col(j) = dft(CVecX(m.col(j).cast<cplx>()));
  return out;
}

CMatX idft_cols(const Eigen::Ref<const CMatX>& m) {
  CMatX out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) out.col(j) = idft(CVecX(m.col(j)));
  return out;
}

VecX circular_convolve(const Eigen::Ref<const VecX>& w, const Eigen::Ref<const VecX>& x) {
  if (w.size() != x.size())
    throw std::invalid_argument("circular_convolve: length mismatch");
  check_length(w.size(), "circular_convolve");
  const double root_l = std::sqrt(static_cast<double>(w.size()));
  const CVecX prod = root_l * dft(w).cwiseProduct(dft(x));
  return idft(prod).real();
}

MatX gaussian_basis(Index L, Index K, Rng& rng) {
  if (L < 1 || K < 1 || K > L)
    throw std::invalid_argument("gaussian_basis: need 1 <= K <= L");
  return rng.normal_mat(L, K) / std::sqrt(static_cast<double>(L));
}

MatX identity_subset_basis(Index L, Index K, Rng& rng) {
  if (L < 1 || K < 1 || K > L)
    throw std::invalid_argument("identity_subset_basis: need 1 <= K <= L");
  const std::vector<Index> cols = rng.sample_without_replacement(L, K);
  MatX basis = MatX::Zero(L, K);
  for (Index k = 0; k < K; ++k) basis(cols[static_cast<std::size_t>(k)], k) = 1.0;
  return basis;
}

VecX sparse_gaussian_vec(Index L, Index S, Rng& rng, std::vector<Index>* support_out) {
  if (L < 1 || S < 1 || S > L)
    throw std::invalid_argument("sparse_gaussian_vec: need 1 <= S <= L");
  const std::vector<Index> support = rng.sample_without_replacement(L, S);
  VecX v = VecX::Zero(L);
  for (Index idx : support) v[idx] = rng.normal();
  if (support_out) *support_out = support;
  return v;
}

MatX random_orthonormal_basis(Index L, Rng& rng) {
  if (L < 1) throw std::invalid_argument("random_orthonormal_basis: need L >= 1");
  const MatX g = rng.normal_mat(L, L);
  Eigen::HouseholderQR<MatX> qr(g);
  MatX q = qr.householderQ();
  const MatX r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < L; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace mdc
