#pragma once

#include <vector>

#include "multidecon/rng.hpp"
#include "multidecon/types.hpp"

namespace mdc {

// Unitary forward DFT: out[w] = (1/sqrt(L)) * sum_l in[l] * exp(-2*pi*i*w*l/L).
CVecX dft(const Eigen::Ref<const CVecX>& x);
CVecX dft(const Eigen::Ref<const VecX>& x);

// Unitary inverse DFT (adjoint of dft).
CVecX idft(const Eigen::Ref<const CVecX>& x);

// Column-wise unitary DFT.
CMatX dft_cols(const Eigen::Ref<const CMatX>& m);
CMatX dft_cols(const Eigen::Ref<const MatX>& m);
CMatX idft_cols(const Eigen::Ref<const CMatX>& m);

// Circular convolution of two real length-L signals, computed in the Fourier
// domain: dft(out) = sqrt(L) * dft(w) .* dft(x).
VecX circular_convolve(const Eigen::Ref<const VecX>& w, const Eigen::Ref<const VecX>& x);

// Dense i.i.d. Gaussian subspace basis, entries Normal(0, 1/L).
MatX gaussian_basis(Index L, Index K, Rng& rng);

// K distinct columns of the L x L identity, chosen uniformly at random and
// kept in increasing column order.
MatX identity_subset_basis(Index L, Index K, Rng& rng);

// Length-L vector supported on a uniform random S-subset with i.i.d.
// standard normal values.  The sorted support is reported via *support_out
// when non-null.
VecX sparse_gaussian_vec(Index L, Index S, Rng& rng, std::vector<Index>* support_out = nullptr);

// Orthonormal L x L basis from the QR factorization of a Gaussian matrix,
// sign-fixed so the result is deterministic in the draw.
MatX random_orthonormal_basis(Index L, Rng& rng);

}  // namespace mdc
