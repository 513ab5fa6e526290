#include "multidecon/coherence.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "multidecon/rng.hpp"
#include "multidecon/spectral.hpp"

namespace mdc {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_basis_shape(const MatX& basis, Index L) {
  if (basis.size() == 0) return;  // empty stands for the standard basis
  if (basis.rows() != L || basis.cols() != L)
    throw std::invalid_argument("basis must be square of size L (or empty for the standard basis)");
}

void check_support(const std::vector<Index>& omega, Index L) {
  if (omega.empty()) throw std::invalid_argument("support must be non-empty");
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (omega[i] < 0 || omega[i] >= L)
      throw std::invalid_argument("support index out of range");
    if (i > 0 && omega[i] <= omega[i - 1])
      throw std::invalid_argument("support must be sorted and duplicate-free");
  }
}

// L x |omega| matrix whose column j is the unitary DFT of the omega[j]-th
// basis column (a Fourier column for the standard basis).
CMatX fourier_columns(const MatX& basis, Index L, const std::vector<Index>& omega) {
  CMatX cols(L, static_cast<Index>(omega.size()));
  for (std::size_t j = 0; j < omega.size(); ++j) {
    if (basis.size() == 0) {
      VecX e = VecX::Zero(L);
      e[omega[j]] = 1.0;
      cols.col(static_cast<Index>(j)) = dft(e);
    } else {
      cols.col(static_cast<Index>(j)) = dft(basis.col(omega[j]));
    }
  }
  return cols;
}

// S x S Hermitian frame block of one partition set: the Gram matrix of the
// rows of `cols` indexed by `rows`.
CMatX frame_block(const CMatX& cols, const std::vector<Index>& rows) {
  const Index S = cols.cols();
  CMatX sub(static_cast<Index>(rows.size()), S);
  for (std::size_t i = 0; i < rows.size(); ++i)
    sub.row(static_cast<Index>(i)) = cols.row(rows[i]);
  return sub.adjoint() * sub;
}

}  // namespace

std::vector<std::pair<const std::vector<Index>*, Index>>
GolfingPartition::round_blocks(Index p) const {
  std::vector<std::pair<const std::vector<Index>*, Index>> out;
  out.reserve(static_cast<std::size_t>(N));
  for (Index n = 0; n < N; ++n) out.emplace_back(&block(n, p), n);
  return out;
}

bool GolfingPartition::valid() const {
  if (L < 1 || N < 1 || P < 1 || Q * P != L) return false;
  if (delta.size() != static_cast<std::size_t>(N)) return false;
  for (const auto& sets : delta) {
    if (sets.size() != static_cast<std::size_t>(P)) return false;
    std::vector<bool> seen(static_cast<std::size_t>(L), false);
    for (const auto& set : sets) {
      if (static_cast<Index>(set.size()) != Q) return false;
      for (std::size_t i = 0; i < set.size(); ++i) {
        if (set[i] < 0 || set[i] >= L) return false;
        if (i > 0 && set[i] <= set[i - 1]) return false;
        if (seen[static_cast<std::size_t>(set[i])]) return false;
        seen[static_cast<std::size_t>(set[i])] = true;
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

Index padded_length(Index L, Index P) {
  if (L < 1 || P < 1) throw std::invalid_argument("padded_length needs positive L and P");
  return ((L + P - 1) / P) * P;
}

GolfingPartition build_partition(Index L, Index N, Index P, std::uint64_t seed) {
  if (L < 1 || N < 1) throw std::invalid_argument("build_partition needs positive L and N");
  if (P < 1 || P > L) throw std::invalid_argument("partition count must lie in [1, L]");
  if (L % P != 0)
    throw std::invalid_argument(
        "partition count must divide the signal length; zero-extend to padded_length(L, P) first");

  GolfingPartition part;
  part.L = L;
  part.N = N;
  part.P = P;
  part.Q = L / P;
  part.seed = seed;
  part.delta.resize(static_cast<std::size_t>(N));

  const Rng root(seed);
  std::vector<Index> perm(static_cast<std::size_t>(L));
  for (Index n = 0; n < N; ++n) {
    Rng rng = root.fork(static_cast<std::uint64_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = L - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.uniform_index(i + 1))]);
    auto& sets = part.delta[static_cast<std::size_t>(n)];
    sets.resize(static_cast<std::size_t>(P));
    for (Index p = 0; p < P; ++p) {
      auto& set = sets[static_cast<std::size_t>(p)];
      set.assign(perm.begin() + p * part.Q, perm.begin() + (p + 1) * part.Q);
      std::sort(set.begin(), set.end());
    }
  }
  return part;
}

double SOperators::max_norm() const {
  return max_eig.empty() ? 0.0 : *std::max_element(max_eig.begin(), max_eig.end());
}

double SOperators::max_inv_norm() const {
  if (min_eig.empty()) return 0.0;
  return 1.0 / *std::min_element(min_eig.begin(), min_eig.end());
}

bool SOperators::eigen_bounds_ok() const {
  const double q_over_l = static_cast<double>(Q()) / static_cast<double>(L);
  return max_norm() <= 1.25 * q_over_l && max_inv_norm() <= (4.0 / 3.0) / q_over_l;
}

SOperators build_S(const GolfingPartition& partition, const MatX& basis,
                   const std::vector<Index>& omega) {
  if (!partition.valid()) throw std::invalid_argument("invalid partition");
  check_basis_shape(basis, partition.L);
  check_support(omega, partition.L);
  const Index S = static_cast<Index>(omega.size());
  if (S > partition.Q)
    throw std::invalid_argument("support size must not exceed the per-set size Q");

  SOperators ops;
  ops.L = partition.L;
  ops.N = partition.N;
  ops.P = partition.P;
  ops.omega = omega;
  const std::size_t blocks = static_cast<std::size_t>(partition.N * partition.P);
  ops.gram.reserve(blocks);
  ops.gram_inv.reserve(blocks);
  ops.min_eig.reserve(blocks);
  ops.max_eig.reserve(blocks);

  ops.fourier_cols = fourier_columns(basis, partition.L, omega);
  const CMatX& cols = ops.fourier_cols;
  Eigen::SelfAdjointEigenSolver<CMatX> es;
  for (Index n = 0; n < partition.N; ++n) {
    for (Index p = 0; p < partition.P; ++p) {
      CMatX g = frame_block(cols, partition.block(n, p));
      es.compute(g);
      const double lo = es.eigenvalues()(0);
      const double hi = es.eigenvalues()(S - 1);
      if (!(lo > 0.0) || hi / lo > 1e12)
        throw std::runtime_error("support block (" + std::to_string(n) + ", " +
                                 std::to_string(p) + ") is singular or near-singular");
      ops.gram.push_back(g);
      ops.gram_inv.push_back(es.eigenvectors() *
                             es.eigenvalues().cwiseInverse().asDiagonal() *
                             es.eigenvectors().adjoint());
      ops.min_eig.push_back(lo);
      ops.max_eig.push_back(hi);
    }
  }
  return ops;
}

double rip_deviation(const GolfingPartition& partition, const MatX& basis,
                     const std::vector<Index>& omega) {
  if (!partition.valid()) throw std::invalid_argument("invalid partition");
  check_basis_shape(basis, partition.L);
  check_support(omega, partition.L);
  const Index S = static_cast<Index>(omega.size());
  const double q_over_l = static_cast<double>(partition.Q) / static_cast<double>(partition.L);

  const CMatX cols = fourier_columns(basis, partition.L, omega);
  Eigen::SelfAdjointEigenSolver<CMatX> es;
  double dev = 0.0;
  for (Index n = 0; n < partition.N; ++n) {
    for (Index p = 0; p < partition.P; ++p) {
      CMatX g = frame_block(cols, partition.block(n, p));
      g -= q_over_l * CMatX::Identity(S, S);
      es.compute(g, Eigen::EigenvaluesOnly);
      dev = std::max(dev, std::max(std::abs(es.eigenvalues()(0)),
                                   std::abs(es.eigenvalues()(S - 1))));
    }
  }
  return dev;
}

double rip_deviation_uniform(const GolfingPartition& partition, const MatX& basis,
                             Index support_size) {
  if (support_size < 1 || support_size > partition.L)
    throw std::invalid_argument("support size out of range");
  double combos = 1.0;
  for (Index i = 0; i < support_size; ++i)
    combos *= static_cast<double>(partition.L - i) / static_cast<double>(i + 1);
  if (combos > 1e6)
    throw std::invalid_argument("too many supports to enumerate");

  std::vector<Index> omega(static_cast<std::size_t>(support_size));
  std::iota(omega.begin(), omega.end(), Index{0});
  double dev = 0.0;
  while (true) {
    dev = std::max(dev, rip_deviation(partition, basis, omega));
    // next combination in lexicographic order
    Index i = support_size - 1;
    while (i >= 0 && omega[static_cast<std::size_t>(i)] == partition.L - support_size + i) --i;
    if (i < 0) break;
    ++omega[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < support_size; ++j)
      omega[static_cast<std::size_t>(j)] = omega[static_cast<std::size_t>(j - 1)] + 1;
  }
  return dev;
}

double mu_max_sq(const MatX& basis) {
  if (basis.rows() < 1 || basis.rows() != basis.cols())
    throw std::invalid_argument("basis must be square and non-empty");
  const Index L = basis.rows();
  const double ortho_err = (basis.transpose() * basis - MatX::Identity(L, L))
                               .cwiseAbs()
                               .maxCoeff();
  if (ortho_err > 1e-8) throw std::invalid_argument("basis is not orthonormal");
  return static_cast<double>(L) * dft_cols(basis).cwiseAbs2().maxCoeff();
}

double rho0_sq(const std::vector<VecX>& m_blocks) {
  if (m_blocks.empty()) throw std::invalid_argument("need at least one input block");
  double total = 0.0;
  double biggest = 0.0;
  for (const VecX& m : m_blocks) {
    const double e = m.squaredNorm();
    total += e;
    biggest = std::max(biggest, e);
  }
  if (total <= 0.0) throw std::invalid_argument("all input blocks are zero");
  return static_cast<double>(m_blocks.size()) * biggest / total;
}

Mu0Breakdown mu0_sq(const MatX& basis, const VecX& h,
                    const GolfingPartition& partition, const SOperators& s_ops) {
  if (h.size() != partition.L) throw std::invalid_argument("h must have length L");
  if (partition.L != s_ops.L || partition.N != s_ops.N || partition.P != s_ops.P)
    throw std::invalid_argument("partition and frame operators disagree on dimensions");
  check_basis_shape(basis, partition.L);
  const double norm_sq = h.squaredNorm();
  if (norm_sq <= 0.0) throw std::invalid_argument("h must be non-zero");

  // h must live on the support the frame operators were built for.
  const double hinf = h.cwiseAbs().maxCoeff();
  {
    std::size_t next = 0;
    for (Index i = 0; i < h.size(); ++i) {
      const bool on = next < s_ops.omega.size() && s_ops.omega[next] == i;
      if (on) ++next;
      else if (std::abs(h[i]) > 1e-12 * hinf)
        throw std::invalid_argument("h has mass outside the frame-operator support");
    }
  }

  const Index L = partition.L;
  const Index S = s_ops.S();
  CVecX hs(S);
  for (Index j = 0; j < S; ++j) hs[j] = cplx(h[s_ops.omega[static_cast<std::size_t>(j)]], 0.0);
  const CMatX cols = fourier_columns(basis, L, s_ops.omega);

  Mu0Breakdown out;
  const double scale = static_cast<double>(L) / norm_sq;
  out.terms[0] = scale * (cols * hs).cwiseAbs2().maxCoeff();

  double peak_inv = 0.0;
  for (Index n = 0; n < partition.N; ++n)
    for (Index p = 0; p < partition.P; ++p)
      peak_inv = std::max(peak_inv,
                          (cols * (s_ops.block_inv(n, p) * hs)).cwiseAbs2().maxCoeff());
  const double q_over_l = static_cast<double>(partition.Q) / static_cast<double>(L);
  out.terms[1] = q_over_l * q_over_l * scale * peak_inv;

  if (partition.P >= 2) {
    double peak_cross = 0.0;
    for (Index n = 0; n < partition.N; ++n) {
      for (Index n2 = 0; n2 < partition.N; ++n2) {
        const CVecX v = s_ops.block_inv(n, 1) * (s_ops.block(n2, 0) * hs);
        peak_cross = std::max(peak_cross, (cols * v).cwiseAbs2().maxCoeff());
      }
    }
    out.terms[2] = scale * peak_cross;
    out.value = std::max({out.terms[0], out.terms[1], out.terms[2]});
  } else {
    out.terms[2] = kNan;
    out.value = std::max(out.terms[0], out.terms[1]);
  }
  return out;
}

TheoremMargins theorem_margins_at(double alpha1, double alpha2, double log_ln,
                                  double L, double K, double N, double S,
                                  double mu0_sq, double mu_max_sq, double rho0_sq,
                                  double beta, double C) {
  TheoremMargins m;
  m.alpha1 = alpha1;
  m.alpha2 = alpha2;
  m.log_ln = log_ln;
  if (!(alpha1 > 0.0) || !(log_ln > 0.0) || !(L > 0.0) || !(N > 0.0)) {
    m.l_margin = kNan;
    m.n_margin = kNan;
    m.defined = false;
    return m;
  }
  const double constant = C * beta;
  const double log_s = std::log(S);
  const double lhs = std::max(mu0_sq * alpha1 * K,
                              mu_max_sq * S * alpha2 * log_s * log_s);
  const double rhs = L / (constant * alpha1 * log_ln * log_ln);
  m.l_margin = lhs / rhs;
  m.n_margin = constant * rho0_sq * alpha1 * log_ln / N;
  m.defined = true;
  return m;
}

TheoremMargins theorem_bound(double L, double K, double N, double S,
                             double mu0_sq, double mu_max_sq, double rho0_sq,
                             double beta, double C) {
  const double ln_arg = L * N;
  if (!(ln_arg > 1.0)) {
    TheoremMargins m;
    m.alpha1 = kNan;
    m.alpha2 = kNan;
    m.log_ln = kNan;
    m.l_margin = kNan;
    m.n_margin = kNan;
    m.defined = false;
    return m;
  }
  const double log_ln = std::log(ln_arg);
  const double a1_arg = K * log_ln;
  const double a2_arg = S * log_ln;
  if (!(a1_arg > 1.0) || !(a2_arg > 1.0)) {
    TheoremMargins m;
    m.log_ln = log_ln;
    m.alpha1 = kNan;
    m.alpha2 = kNan;
    m.l_margin = kNan;
    m.n_margin = kNan;
    m.defined = false;
    return m;
  }
  return theorem_margins_at(std::log(a1_arg), std::log(a2_arg), log_ln,
                            L, K, N, S, mu0_sq, mu_max_sq, rho0_sq, beta, C);
}

}  // namespace mdc
