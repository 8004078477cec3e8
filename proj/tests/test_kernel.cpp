#include <doctest.h>

#include <cmath>

#include "negdep/kernel.hpp"
#include "oracles.hpp"

using namespace negdep;

TEST_CASE("validate: identity, scaled identity and rank-one projector") {
  auto id = KernelMatrix::from_real(MatrixXd::Identity(3, 3), KernelKind::Marginal);
  auto r = validate(id);
  CHECK(r.valid);
  CHECK(r.min_eig == doctest::Approx(1.0));
  CHECK(r.max_eig == doctest::Approx(1.0));

  auto big = KernelMatrix::from_real(1.5 * MatrixXd::Identity(2, 2), KernelKind::Marginal);
  r = validate(big);
  CHECK_FALSE(r.valid);
  CHECK(r.max_eig == doctest::Approx(1.5));
  CHECK(r.violated_rule.has_value());

  auto proj = KernelMatrix::from_real(0.5 * MatrixXd::Ones(2, 2), KernelKind::Marginal);
  r = validate(proj);
  CHECK(r.valid);
  CHECK(std::abs(r.min_eig) < 1e-12);
  CHECK(std::abs(r.max_eig - 1.0) < 1e-12);
}

TEST_CASE("validate rejects malformed input") {
  CHECK_THROWS_AS(KernelMatrix(MatrixXc::Zero(2, 3), KernelKind::Marginal, true), std::invalid_argument);
  MatrixXd bad = MatrixXd::Identity(2, 2);
  bad(0, 1) = NAN;
  CHECK_THROWS_AS(KernelMatrix::from_real(bad, KernelKind::Likelihood), std::invalid_argument);
  MatrixXd asym = MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.3;
  CHECK_THROWS_AS(KernelMatrix::from_real(asym, KernelKind::Likelihood, true), std::invalid_argument);
  // Non-hermitian kernels are representable and only checked for finiteness.
  auto nh = KernelMatrix::from_real(asym, KernelKind::Marginal, false);
  CHECK(validate(nh).valid);
}

TEST_CASE("l_to_marginal examples") {
  auto l = KernelMatrix::from_real(MatrixXd::Identity(2, 2), KernelKind::Likelihood);
  auto k = l_to_marginal(l);
  CHECK(k.kind() == KernelKind::Marginal);
  CHECK((k.real_entries() - 0.5 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 2.0;
  k = l_to_marginal(KernelMatrix::from_real(d, KernelKind::Likelihood));
  CHECK(std::abs(k.real_entries()(0, 0) - 2.0 / 3.0) < 1e-14);
  CHECK(std::abs(k.real_entries()(1, 1)) < 1e-14);
}

TEST_CASE("marginal_to_l examples") {
  auto k = KernelMatrix::from_real(0.5 * MatrixXd::Identity(2, 2), KernelKind::Marginal);
  CHECK((marginal_to_l(k).real_entries() - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  auto z = KernelMatrix::from_real(MatrixXd::Zero(3, 3), KernelKind::Marginal);
  CHECK(marginal_to_l(z).real_entries().cwiseAbs().maxCoeff() < 1e-14);
  auto p = KernelMatrix::from_real(0.5 * MatrixXd::Ones(2, 2), KernelKind::Marginal);
  CHECK_THROWS_AS(marginal_to_l(p), std::invalid_argument);
}

TEST_CASE("L <-> K round trip on random PSD matrices") {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.below(16));
    MatrixXd a = oracle::random_psd(n, rng);
    auto l = KernelMatrix::from_real(a, KernelKind::Likelihood);
    auto k = l_to_marginal(l);
    // Independent check of K = L (I + L)^{-1}.
    MatrixXd expect = a * (MatrixXd::Identity(n, n) + a).inverse();
    CHECK((k.real_entries() - expect).cwiseAbs().maxCoeff() < 1e-9);
    auto back = marginal_to_l(k);
    CHECK((back.real_entries() - a).cwiseAbs().maxCoeff() < 1e-9);
    // Marginals are probabilities.
    const VectorXd diag = k.real_entries().diagonal();
    CHECK(diag.minCoeff() >= -1e-12);
    CHECK(diag.maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("complex hermitian conversion keeps eigenvectors") {
  Rng rng(3);
  MatrixXc b(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b(i, j) = rng.complex_normal();
  MatrixXc l = b.adjoint() * b;
  KernelMatrix lk(l, KernelKind::Likelihood, true);
  auto k = l_to_marginal(lk);
  MatrixXc expect = l * (MatrixXc::Identity(3, 3) + l).inverse();
  CHECK((k.entries() - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projection_from_rows") {
  MatrixXd v = MatrixXd::Identity(5, 5).topRows(2);
  auto k = projection_from_rows(v);
  MatrixXd expect = MatrixXd::Zero(5, 5);
  expect(0, 0) = expect(1, 1) = 1.0;
  CHECK((k.real_entries() - expect).cwiseAbs().maxCoeff() == 0.0);

  MatrixXd u(1, 2);
  u << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  k = projection_from_rows(u);
  CHECK((k.real_entries() - 0.5 * MatrixXd::Ones(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(k.real_entries().trace() - 1.0) < 1e-15);

  Rng rng(5);
  MatrixXd r = oracle::random_orthonormal_rows(3, 8, rng);
  k = projection_from_rows(r);
  const MatrixXd km = k.real_entries();
  CHECK((km * km - km).norm() < 1e-10);
  CHECK(std::abs(km.trace() - 3.0) < 1e-10);
  CHECK(idempotency_error(k) < 1e-10);

  MatrixXd notortho = MatrixXd::Ones(2, 3);
  CHECK_THROWS_AS(projection_from_rows(notortho), std::invalid_argument);
}

TEST_CASE("rbf_kernel") {
  MatrixXd same = MatrixXd::Ones(4, 2);
  auto l = rbf_kernel(same, 1.0, 0.0);
  CHECK((l.real_entries() - MatrixXd::Ones(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  Eigen::FullPivLU<MatrixXd> lu(l.real_entries());
  CHECK(lu.rank() == 1);

  MatrixXd spread(3, 1);
  spread << 0, 1, 2;
  l = rbf_kernel(spread, 1.0, 0.0);
  CHECK(std::abs(l.real_entries()(0, 1) - std::exp(-1.0)) < 1e-15);
  CHECK(std::abs(l.real_entries()(0, 2) - std::exp(-4.0)) < 1e-15);
  l = rbf_kernel(spread, 200.0, 0.0);
  CHECK((l.real_entries() - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-80);

  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    MatrixXd pts(6, 2);
    for (int i = 0; i < 6; ++i) pts.row(i) << rng.normal(), rng.normal();
    CHECK(validate(rbf_kernel(pts, 0.1 + rng.uniform(), rng.uniform())).valid);
  }
  CHECK_THROWS_AS(rbf_kernel(spread, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("low-rank factor reproduces L") {
  Rng rng(2);
  MatrixXd b(3, 7);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 7; ++j) b(i, j) = rng.normal();
  LowRankFactor f(b);
  CHECK(f.rank() == 3);
  CHECK((f.likelihood().real_entries() - b.transpose() * b).cwiseAbs().maxCoeff() < 1e-10);
  // Dual kernel shares the nonzero spectrum.
  Eigen::SelfAdjointEigenSolver<MatrixXd> d(f.dual());
  VectorXd full = f.likelihood().spectrum().values.tail(3);
  CHECK((d.eigenvalues() - full).cwiseAbs().maxCoeff() < 1e-9);
}
