#include <doctest.h>

#include <cmath>
#include <set>

#include "multidecon/rng.hpp"
#include "multidecon/spectral.hpp"
#include "oracles.hpp"

using namespace mdc;

TEST_CASE("dft matches the dense unitary DFT matrix") {
  Rng rng(11);
  for (Index L : {1, 2, 3, 4, 8, 12, 16, 37, 64, 100}) {
    const CMatX F = oracle::dft_matrix(L);
    const VecX x = rng.normal_vec(L);
    const CVecX got = dft(x);
    const CVecX want = F * x.cast<cplx>();
    CHECK((got - want).norm() <= 1e-12 * std::max(1.0, want.norm()));

    CVecX z(L);
    for (Index i = 0; i < L; ++i) z[i] = cplx(rng.normal(), rng.normal());
    CHECK((dft(z) - F * z).norm() <= 1e-12 * z.norm());
  }
}

TEST_CASE("dft of a delta is flat and of a shifted delta is a phase ramp") {
  const Index L = 4;
  VecX delta = VecX::Zero(L);
  delta[0] = 1.0;
  const CVecX d0 = dft(delta);
  for (Index i = 0; i < L; ++i) CHECK(std::abs(d0[i] - cplx(0.5, 0.0)) <= 1e-15);

  VecX shifted = VecX::Zero(L);
  shifted[1] = 1.0;
  const CVecX d1 = dft(shifted);
  // (1/2) * [1, -i, -1, i]
  CHECK(std::abs(d1[0] - cplx(0.5, 0.0)) <= 1e-15);
  CHECK(std::abs(d1[1] - cplx(0.0, -0.5)) <= 1e-15);
  CHECK(std::abs(d1[2] - cplx(-0.5, 0.0)) <= 1e-15);
  CHECK(std::abs(d1[3] - cplx(0.0, 0.5)) <= 1e-15);
}

TEST_CASE("dft is unitary and idft inverts it") {
  Rng rng(21);
  for (Index L : {1, 2, 5, 16, 31, 128}) {
    const VecX x = rng.normal_vec(L);
    const CVecX xh = dft(x);
    CHECK(std::abs(xh.norm() - x.norm()) <= 1e-12 * std::max(1.0, x.norm()));
    CHECK((idft(xh).real() - x).norm() <= 1e-12 * std::max(1.0, x.norm()));
    CHECK(idft(xh).imag().norm() <= 1e-12 * std::max(1.0, x.norm()));
  }
}

TEST_CASE("dft of a real signal is conjugate symmetric") {
  Rng rng(31);
  for (Index L : {6, 7, 64, 65}) {
    const CVecX xh = dft(VecX(rng.normal_vec(L)));
    for (Index l = 1; l < L; ++l)
      CHECK(std::abs(xh[L - l] - std::conj(xh[l])) <= 1e-12);
  }
}

TEST_CASE("circular_convolve matches the direct sum") {
  Rng rng(41);
  for (Index L : {1, 2, 3, 4, 15, 16, 37, 128}) {
    const VecX w = rng.normal_vec(L);
    const VecX x = rng.normal_vec(L);
    const VecX want = oracle::circ_conv_direct(w, x);
    const VecX got = circular_convolve(w, x);
    CHECK((got - want).norm() <= 1e-11 * std::max(1.0, want.norm()));
    // Commutativity.
    CHECK((circular_convolve(x, w) - got).norm() <= 1e-11 * std::max(1.0, got.norm()));
  }
}

TEST_CASE("circular_convolve hand values, delta identity, shift") {
  VecX w(2), x(2);
  w << 1, 2;
  x << 3, 4;
  const VecX y = circular_convolve(w, x);
  CHECK(y[0] == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(10.0).epsilon(1e-12));

  Rng rng(51);
  const Index L = 9;
  const VecX v = rng.normal_vec(L);
  VecX delta = VecX::Zero(L);
  delta[0] = 1.0;
  CHECK((circular_convolve(delta, v) - v).norm() <= 1e-12);

  VecX shift = VecX::Zero(L);
  shift[1] = 1.0;
  const VecX rolled = circular_convolve(shift, v);
  for (Index t = 0; t < L; ++t)
    CHECK(rolled[t] == doctest::Approx(v[(t - 1 + L) % L]).epsilon(1e-10));
}

TEST_CASE("convolution diagonalizes: dft(w conv x) = sqrt(L) dft(w).*dft(x)") {
  Rng rng(61);
  for (Index L : {8, 27, 90}) {
    const VecX w = rng.normal_vec(L);
    const VecX x = rng.normal_vec(L);
    const CVecX lhs = dft(VecX(oracle::circ_conv_direct(w, x)));
    const CVecX rhs =
        std::sqrt(static_cast<double>(L)) * dft(w).cwiseProduct(dft(x));
    CHECK((lhs - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("gaussian_basis has Normal(0, 1/L) entries and is seed-stable") {
  const Index L = 200, K = 50;
  Rng rng(71);
  const MatX c = gaussian_basis(L, K, rng);
  REQUIRE(c.rows() == L);
  REQUIRE(c.cols() == K);
  const double n = static_cast<double>(L * K);
  const double mean = c.sum() / n;
  const double var = (c.array() - mean).square().sum() / n;
  CHECK(std::abs(mean) < 5.0 / std::sqrt(n * static_cast<double>(L)));
  CHECK(std::abs(var * L - 1.0) < 0.08);

  Rng r1(123), r2(123);
  CHECK((gaussian_basis(16, 4, r1) - gaussian_basis(16, 4, r2)).norm() == 0.0);
  CHECK_THROWS_AS(gaussian_basis(4, 5, r1), std::invalid_argument);
}

TEST_CASE("identity_subset_basis picks distinct identity columns uniformly") {
  Rng rng(81);
  const Index L = 12, K = 5;
  const MatX c = identity_subset_basis(L, K, rng);
  REQUIRE(c.rows() == L);
  REQUIRE(c.cols() == K);
  std::set<Index> picked;
  Index prev = -1;
  for (Index k = 0; k < K; ++k) {
    CHECK(c.col(k).sum() == 1.0);
    CHECK(c.col(k).maxCoeff() == 1.0);
    CHECK(c.col(k).minCoeff() == 0.0);
    Index row = -1;
    c.col(k).maxCoeff(&row);
    picked.insert(row);
    CHECK(row > prev);  // increasing column order
    prev = row;
  }
  CHECK(picked.size() == static_cast<std::size_t>(K));

  // Marginal inclusion of row 0 is K/L.
  Rng rng2(91);
  const int trials = 8000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    const MatX b = identity_subset_basis(L, K, rng2);
    hits += (b.row(0).sum() > 0.5);
  }
  const double p = static_cast<double>(K) / L;
  CHECK(std::abs(hits / static_cast<double>(trials) - p) <
        5.0 * std::sqrt(p * (1 - p) / trials));
}

TEST_CASE("sparse_gaussian_vec is supported on a uniform S-subset") {
  Rng rng(101);
  std::vector<Index> support;
  const VecX v = sparse_gaussian_vec(40, 6, rng, &support);
  REQUIRE(support.size() == 6);
  CHECK(std::is_sorted(support.begin(), support.end()));
  Index nonzeros = 0;
  for (Index i = 0; i < v.size(); ++i) nonzeros += (v[i] != 0.0);
  CHECK(nonzeros == 6);
  for (Index i : support) CHECK(v[i] != 0.0);
}

TEST_CASE("random_orthonormal_basis is orthonormal and deterministic") {
  Rng rng(111);
  const MatX q = random_orthonormal_basis(24, rng);
  CHECK((q.transpose() * q - MatX::Identity(24, 24)).cwiseAbs().maxCoeff() <= 1e-12);
  Rng r1(5), r2(5);
  CHECK((random_orthonormal_basis(8, r1) - random_orthonormal_basis(8, r2)).norm() == 0.0);
}
