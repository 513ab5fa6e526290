#include <doctest.h>

#include <cmath>
#include <vector>

#include "multidecon/lifting.hpp"
#include "multidecon/rng.hpp"
#include "multidecon/spectral.hpp"
#include "oracles.hpp"

using namespace mdc;

namespace {

struct SmallInstance {
  MeasurementOp op;
  VecX h;       // L
  VecX m;       // K*N
  MatX lifted;  // h * m^T
};

SmallInstance make_instance(Index L, Index K, Index N, Rng& rng, bool random_filter_basis = false,
                            bool identity_subset = false, bool cache_rows = true) {
  std::vector<MatX> bases;
  bases.reserve(static_cast<std::size_t>(N));
  for (Index n = 0; n < N; ++n)
    bases.push_back(identity_subset ? identity_subset_basis(L, K, rng)
                                    : gaussian_basis(L, K, rng));
  MatX B;
  if (random_filter_basis) B = random_orthonormal_basis(L, rng);
  SmallInstance inst;
  inst.op = build_measurement_op(std::move(bases), std::move(B), cache_rows);
  inst.h = rng.normal_vec(L);
  inst.h /= inst.h.norm();
  inst.m = rng.normal_vec(K * N);
  inst.m /= inst.m.norm();
  inst.lifted = inst.h * inst.m.transpose();
  return inst;
}

std::vector<MeasIndex> all_indices(Index L, Index N) {
  std::vector<MeasIndex> idx;
  idx.reserve(static_cast<std::size_t>(L * N));
  for (Index n = 0; n < N; ++n)
    for (Index l = 0; l < L; ++l) idx.emplace_back(l, n);
  return idx;
}

}  // namespace

TEST_CASE("forward of the rank-one lift equals spectra of circular convolutions") {
  Rng rng(7001);
  for (bool random_b : {false, true}) {
    for (bool idsub : {false, true}) {
      for (Index L : {5, 8, 13, 16}) {
        const Index K = 3, N = 4;
        auto inst = make_instance(L, K, N, rng, random_b, idsub);
        const VecX w = inst.op.identity_basis_w() ? inst.h : VecX(inst.op.basis_w * inst.h);
        const CMatX F = oracle::dft_matrix(L);
        CMatX want(L, N);
        for (Index n = 0; n < N; ++n) {
          const VecX xn = inst.op.bases_x[static_cast<std::size_t>(n)] *
                          inst.m.segment(n * K, K);
          want.col(n) = F * oracle::circ_conv_direct(w, xn).cast<cplx>();
        }
        const CMatX got = forward(inst.op, inst.lifted);
        CHECK((got - want).norm() <= 1e-9 * std::max(1.0, want.norm()));

        const CMatX got_fac =
            forward_factored(inst.op, MatX(inst.h), MatX(inst.m));
        CHECK((got_fac - want).norm() <= 1e-9 * std::max(1.0, want.norm()));
      }
    }
  }
}

TEST_CASE("forward matches the dense from-definition evaluation on general X") {
  Rng rng(7097);
  const Index L = 12, K = 2, N = 3;
  auto inst = make_instance(L, K, N, rng, true);
  const MatX X = rng.normal_mat(L, K * N);
  const MatX B = inst.op.basis_w;
  const CMatX want = oracle::lifted_forward_direct(B, inst.op.bases_x, X);
  CHECK((forward(inst.op, X) - want).norm() <= 1e-10 * std::max(1.0, want.norm()));
}

TEST_CASE("factored forward agrees with forming the product") {
  Rng rng(7013);
  const Index L = 16, K = 3, N = 5, R = 2;
  auto inst = make_instance(L, K, N, rng);
  const MatX H = rng.normal_mat(L, R);
  const MatX M = rng.normal_mat(K * N, R);
  const CMatX a = forward_factored(inst.op, H, M);
  const CMatX b = forward(inst.op, MatX(H * M.transpose()));
  CHECK((a - b).norm() <= 1e-11 * std::max(1.0, b.norm()));
}

TEST_CASE("adjoint satisfies the real inner-product identity") {
  Rng rng(7029);
  for (bool random_b : {false, true}) {
    const Index L = 11, K = 2, N = 3;
    auto inst = make_instance(L, K, N, rng, random_b);
    for (int rep = 0; rep < 20; ++rep) {
      const MatX X = rng.normal_mat(L, K * N);
      CMatX U(L, N);
      for (Index j = 0; j < N; ++j)
        for (Index i = 0; i < L; ++i) U(i, j) = cplx(rng.normal(), rng.normal());
      const CMatX AX = forward(inst.op, X);
      const double lhs = (AX.conjugate().cwiseProduct(U.cast<cplx>())).sum().real();
      const MatX AtU = adjoint(inst.op, U);
      const double rhs = (X.array() * AtU.array()).sum();
      CHECK(std::abs(lhs - rhs) <=
            1e-10 * std::max(1.0, std::max(std::abs(lhs), std::abs(rhs))));
    }
  }
}

TEST_CASE("complex adjoint satisfies the complex inner-product identity") {
  Rng rng(7031);
  for (bool random_b : {false, true}) {
    const Index L = 11, K = 2, N = 3;
    auto inst = make_instance(L, K, N, rng, random_b);
    for (int rep = 0; rep < 20; ++rep) {
      CMatX X(L, K * N);
      for (Index j = 0; j < K * N; ++j)
        for (Index i = 0; i < L; ++i) X(i, j) = cplx(rng.normal(), rng.normal());
      CMatX U(L, N);
      for (Index j = 0; j < N; ++j)
        for (Index i = 0; i < L; ++i) U(i, j) = cplx(rng.normal(), rng.normal());
      const CMatX AX = forward(inst.op, X);
      const cplx lhs = (U.conjugate().cwiseProduct(AX)).sum();
      const CMatX AtU = adjoint_complex(inst.op, U);
      const cplx rhs = (AtU.conjugate().cwiseProduct(X)).sum();
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }

    // The real adjoint is the entrywise real part of the complex one.
    CMatX U(L, N);
    for (Index j = 0; j < N; ++j)
      for (Index i = 0; i < L; ++i) U(i, j) = cplx(rng.normal(), rng.normal());
    const MatX re = adjoint(inst.op, U);
    const CMatX full = adjoint_complex(inst.op, U);
    CHECK((re - full.real()).norm() <= 1e-12 * std::max(1.0, re.norm()));
  }
}

TEST_CASE("complex subset adjoint embeds coefficients at their slots") {
  Rng rng(7037);
  const Index L = 12, K = 2, N = 3;
  auto inst = make_instance(L, K, N, rng, true);
  std::vector<MeasIndex> subset = {{0, 0}, {3, 1}, {7, 2}, {11, 0}, {5, 1}};
  CVecX u(static_cast<Index>(subset.size()));
  CMatX U = CMatX::Zero(L, N);
  for (Index i = 0; i < u.size(); ++i) {
    u[i] = cplx(rng.normal(), rng.normal());
    const auto& [l, n] = subset[static_cast<std::size_t>(i)];
    U(l, n) += u[i];
  }
  const CMatX a = adjoint_subset_complex(inst.op, subset, u);
  const CMatX b = adjoint_complex(inst.op, U);
  CHECK((a - b).norm() <= 1e-12 * std::max(1.0, b.norm()));

  const MatX re = adjoint_subset(inst.op, subset, u);
  CHECK((re - a.real()).norm() <= 1e-12 * std::max(1.0, re.norm()));
}

TEST_CASE("subset forward/adjoint agree with their full counterparts") {
  Rng rng(7039);
  const Index L = 10, K = 2, N = 3;
  auto inst = make_instance(L, K, N, rng);
  const auto idx = all_indices(L, N);

  const MatX X = rng.normal_mat(L, K * N);
  const CMatX full = forward(inst.op, X);
  const CVecX sub = forward_subset(inst.op, X, idx);
  Index i = 0;
  double max_err = 0.0;
  for (const auto& [l, n] : idx)
    max_err = std::max(max_err, std::abs(sub[i++] - full(l, n)));
  CHECK(max_err <= 1e-11);

  CVecX u(static_cast<Index>(idx.size()));
  CMatX U(L, N);
  i = 0;
  for (const auto& [l, n] : idx) {
    u[i] = cplx(rng.normal(), rng.normal());
    U(l, n) = u[i];
    ++i;
  }
  const MatX a = adjoint_subset(inst.op, idx, u);
  const MatX b = adjoint(inst.op, U);
  CHECK((a - b).norm() <= 1e-10 * std::max(1.0, b.norm()));
}

TEST_CASE("cache-free operator reproduces the cached results") {
  Rng rng(7043);
  const Index L = 9, K = 2, N = 2;
  Rng rng_copy = rng;  // same draws for both builds
  auto cached = make_instance(L, K, N, rng, false, false, true);
  auto light = make_instance(L, K, N, rng_copy, false, false, false);
  CHECK(!light.op.cached());

  const MatX X = rng.normal_mat(L, K * N);
  CHECK((forward(cached.op, X) - forward(light.op, X)).norm() <= 1e-12);

  CMatX U(L, N);
  for (Index j = 0; j < N; ++j)
    for (Index i = 0; i < L; ++i) U(i, j) = cplx(rng.normal(), rng.normal());
  // Keep U identical for both (rng already consumed), reuse same U object.
  CHECK((adjoint(cached.op, U) - adjoint(light.op, U)).norm() <= 1e-12);

  const auto idx = all_indices(L, N);
  CHECK((forward_subset(cached.op, X, idx) - forward_subset(light.op, X, idx)).norm() <=
        1e-12);
  for (Index l = 0; l < L; ++l) {
    CHECK((filter_row(cached.op, l) - filter_row(light.op, l)).norm() <= 1e-12);
    CHECK((input_row(cached.op, l, 1) - input_row(light.op, l, 1)).norm() <= 1e-12);
  }
  CHECK(operator_norm(cached.op) == doctest::Approx(operator_norm(light.op)).epsilon(1e-12));
}

TEST_CASE("operator norm formula matches power iteration") {
  Rng rng(7057);
  {
    auto inst = make_instance(8, 2, 2, rng);
    const double formula = operator_norm(inst.op);
    const double power = operator_norm_power(inst.op, 4000, 1e-14, 3);
    CHECK(std::abs(formula - power) <= 1e-6 * formula);
  }
  {
    auto inst = make_instance(12, 3, 2, rng, true);
    const double formula = operator_norm(inst.op);
    const double power = operator_norm_power(inst.op, 4000, 1e-14, 5);
    CHECK(std::abs(formula - power) <= 1e-6 * formula);
  }
}

TEST_CASE("shape validation throws on malformed inputs") {
  Rng rng(7069);
  std::vector<MatX> bases{gaussian_basis(8, 2, rng), gaussian_basis(8, 3, rng)};
  CHECK_THROWS_AS(build_measurement_op(std::move(bases)), std::invalid_argument);

  std::vector<MatX> ok{gaussian_basis(8, 2, rng)};
  MatX bad_b = MatX::Ones(8, 8);
  CHECK_THROWS_AS(build_measurement_op(std::move(ok), std::move(bad_b)),
                  std::invalid_argument);

  auto inst = make_instance(8, 2, 2, rng);
  CHECK_THROWS_AS(forward(inst.op, MatX(MatX::Zero(8, 3))), std::invalid_argument);
  CHECK_THROWS_AS(forward_subset(inst.op, MatX(MatX::Zero(8, 4)),
                                 std::vector<MeasIndex>{{8, 0}}),
                  std::out_of_range);
}
