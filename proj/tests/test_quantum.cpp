#include <doctest.h>

#include <bit>
#include <cmath>

#include "negdep/quantum.hpp"
#include "negdep/stats.hpp"

using namespace negdep;

namespace {

// |det V_{[r], S}|^2 for every S with |S| = r.
std::vector<double> minor_law(const MatrixXc& v, int r) {
  const int n = static_cast<int>(v.cols());
  std::vector<double> p(std::size_t{1} << n, 0.0);
  for (std::uint64_t mask = 0; mask < p.size(); ++mask) {
    if (std::popcount(mask) != r) continue;
    MatrixXc sub(r, r);
    int c = 0;
    for (int j = 0; j < n; ++j)
      if (mask >> j & 1U) sub.col(c++) = v.topRows(r).col(j);
    p[mask] = std::norm(sub.determinant());
  }
  return p;
}

}  // namespace

TEST_CASE("jordan-wigner: single creation, nilpotency, linearity") {
  const StateVector s = apply_jw({0, true}, StateVector::vacuum(2));
  CHECK(s.amp(1) == cplx(1.0));
  CHECK(s.amp.norm() == doctest::Approx(1.0));
  // a_1^* on |10> picks up the parity of mode 0
  const StateVector t = apply_jw({1, true}, s);
  CHECK(t.amp(3) == cplx(-1.0));

  Rng rng(1);
  StateVector psi{4, VectorXc(16)};
  for (Index i = 0; i < 16; ++i) psi.amp(i) = rng.complex_normal();
  psi.amp.normalize();
  for (int i = 0; i < 4; ++i) {
    CHECK(apply_jw({i, true}, apply_jw({i, true}, psi)).norm() < 1e-14);
    CHECK(apply_jw({i, false}, apply_jw({i, false}, psi)).norm() < 1e-14);
  }
  StateVector phi{4, VectorXc(16)};
  for (Index i = 0; i < 16; ++i) phi.amp(i) = rng.complex_normal();
  const cplx a(0.3, -1.2);
  StateVector comb{4, a * psi.amp + phi.amp};
  const VectorXc lhs = apply_jw({2, false}, comb).amp;
  const VectorXc rhs = a * apply_jw({2, false}, psi).amp + apply_jw({2, false}, phi).amp;
  CHECK((lhs - rhs).norm() < 1e-14);
  CHECK_THROWS_AS(apply_jw({4, true}, psi), std::invalid_argument);
  CHECK_THROWS_AS(StateVector::vacuum(15), std::invalid_argument);
}

TEST_CASE("CAR relations as dense matrices") {
  for (int n = 1; n <= 5; ++n) CHECK(car_residuals(n).max() < 1e-12);
  // explicit check of one mixed anticommutator, N = 4
  const MatrixXc a2 = jw_matrix({2, false}, 4);
  const MatrixXc a2d = jw_matrix({2, true}, 4);
  CHECK((a2d - a2.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a2 * a2d + a2d * a2 - MatrixXc::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-12);
  Rng rng(2);
  for (int n = 2; n <= 5; ++n) CHECK(car_residuals(haar_unitary(n, rng)).max() < 1e-12);
}

TEST_CASE("slater preparation: coordinate modes, particle number, norm") {
  const StateVector s = prepare_slater(MatrixXc::Identity(5, 5), 2);
  CHECK(std::abs(s.amp(0b00011)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.amp.norm() == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(3);
  const MatrixXc v = haar_unitary(8, rng);
  const StateVector t = prepare_slater(v, 3);
  CHECK(std::abs(t.norm() - 1.0) < 1e-10);
  for (Index i = 0; i < t.amp.size(); ++i)
    if (std::abs(t.amp(i)) > 1e-15) CHECK(std::popcount(static_cast<std::uint64_t>(i)) == 3);

  MatrixXc bad = v;
  bad(0, 0) += 1e-6;
  CHECK_THROWS_AS(prepare_slater(bad, 2), std::invalid_argument);
  CHECK_THROWS_AS(prepare_slater(v, 0), std::invalid_argument);
  CHECK_THROWS_AS(prepare_slater(v, 9), std::invalid_argument);
}

TEST_CASE("occupation law equals the projection DPP") {
  const SubsetDistribution point = occupation_distribution(StateVector::basis(4, 0b0011));
  CHECK(point[0b0011] == 1.0);

  Rng rng(4);
  for (int t = 0; t < 25; ++t) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n, 4))));
    const MatrixXc v = haar_unitary(n, rng);
    const SubsetDistribution q = occupation_distribution(prepare_slater(v, r));
    double total = 0.0;
    for (double p : q.probabilities()) total += p;
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(stats::total_variation(q.probabilities(), classical_projection_law(v, r).probabilities()) < 1e-9);
    CHECK(stats::total_variation(q.probabilities(), minor_law(v, r)) < 1e-9);
  }
  StateVector un = StateVector::basis(3, 1);
  un.amp *= 1.1;
  CHECK_THROWS_AS(occupation_distribution(un), std::invalid_argument);
}

TEST_CASE("occupation law depends only on the row span") {
  Rng rng(5);
  const MatrixXc v = haar_unitary(6, rng);
  const MatrixXc mix = haar_unitary(3, rng);
  MatrixXc w = v;
  w.topRows(3) = mix * v.topRows(3);
  const auto p = occupation_distribution(prepare_slater(v, 3)).probabilities();
  const auto q = occupation_distribution(prepare_slater(w, 3)).probabilities();
  CHECK(stats::total_variation(p, q) < 1e-9);
}

TEST_CASE("measurement: point mass, weight r, frequencies") {
  Rng rng(6);
  const StateVector basis = StateVector::basis(5, 0b10110);
  for (int t = 0; t < 20; ++t) CHECK(measure(basis, rng) == 0b10110U);

  const MatrixXc v = haar_unitary(5, rng);
  const StateVector s = prepare_slater(v, 2);
  const std::vector<std::uint64_t> draws = measure_many(s, 100000, rng);
  std::vector<double> freq(32, 0.0);
  for (std::uint64_t x : draws) {
    CHECK(std::popcount(x) == 2);
    freq[x] += 1.0;
  }
  CHECK(stats::chi_square_gof(freq, occupation_distribution(s).probabilities()).p_value > 0.01);
}
