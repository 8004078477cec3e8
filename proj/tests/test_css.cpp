#include <doctest.h>

#include <cmath>

#include "negdep/css.hpp"
#include "negdep/stats.hpp"
#include "oracles.hpp"

using namespace negdep;

namespace {

MatrixXd gaussian(Index n, Index d, Rng& rng) {
  MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  return x;
}

// X = U diag(s) W^T with random orthonormal U (n x r) and W (d x r).
MatrixXd with_spectrum(Index n, Index d, const VectorXd& s, Rng& rng) {
  const Index r = s.size();
  MatrixXd u = oracle::random_orthonormal_rows(static_cast<int>(r), static_cast<int>(n), rng).transpose();
  MatrixXd w = oracle::random_orthonormal_rows(static_cast<int>(r), static_cast<int>(d), rng).transpose();
  return u * s.asDiagonal() * w.transpose();
}

double esp(const VectorXd& v, Index k) {
  VectorXd e = VectorXd::Zero(k + 1);
  e(0) = 1.0;
  for (Index i = 0; i < v.size(); ++i)
    for (Index j = k; j >= 1; --j) e(j) += v(i) * e(j - 1);
  return e(k);
}

}  // namespace

TEST_CASE("leverage scores: identity, sum, angle oracle") {
  Rng rng(1);
  MatrixXd q = oracle::random_orthonormal_rows(4, 7, rng).transpose() * 2.5;
  FeatureMatrix orth(q);
  for (double l : leverage_scores(orth, 4)) CHECK(l == doctest::Approx(1.0).epsilon(1e-12));

  for (int t = 0; t < 10; ++t) {
    FeatureMatrix fm(gaussian(6, 5, rng));
    VectorXd l = leverage_scores(fm, 2);
    CHECK(std::abs(l.sum() - 2.0) < 1e-12);
    CHECK(l.minCoeff() >= 0.0);
    CHECK(l.maxCoeff() <= 1.0 + 1e-12);

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(fm.x().transpose() * fm.x());
    MatrixXd top = es.eigenvectors().rightCols(2);
    for (Index i = 0; i < 5; ++i) {
      VectorXd e = VectorXd::Unit(5, i);
      VectorXd coef = top.colPivHouseholderQr().solve(e);
      const double cos2 = (top * coef).squaredNorm();
      CHECK(l(i) == doctest::Approx(cos2).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(leverage_scores(FeatureMatrix(MatrixXd::Ones(4, 3)), 2), std::invalid_argument);
}

TEST_CASE("approx error: full set, optimal subspace, least-squares oracle") {
  Rng rng(2);
  MatrixXd x = gaussian(6, 5, rng);
  FeatureMatrix fm(x);
  CHECK(approx_error(x, {0, 1, 2, 3, 4}, 5) < 1e-20);

  MatrixXd u = oracle::random_orthonormal_rows(5, 8, rng).transpose();
  VectorXd s(5);
  s << 5, 4, 3, 2, 1;
  MatrixXd aligned = u * s.asDiagonal();
  CHECK(approx_error(aligned, {0, 1}, 2) == doctest::Approx(9.0 + 4.0 + 1.0).epsilon(1e-12));

  for (int t = 0; t < 10; ++t) {
    std::vector<Index> sel{static_cast<Index>(rng.below(5))};
    Index other;
    do other = static_cast<Index>(rng.below(5)); while (other == sel[0]);
    sel.push_back(other);
    MatrixXd xs(6, 2);
    xs << x.col(sel[0]), x.col(sel[1]);
    MatrixXd b = (xs.transpose() * xs).ldlt().solve(xs.transpose() * x);
    CHECK(approx_error(x, sel, 2) == doctest::Approx((x - xs * b).squaredNorm()).epsilon(1e-10));
    CHECK(approx_error(x, sel, 2) >= fm.optimal_error(2) - 1e-9);
  }
}

TEST_CASE("selection: dpp marginals, zero column, uniform length-squared") {
  Rng rng(3);
  FeatureMatrix fm(gaussian(6, 5, rng));
  const VectorXd lev = leverage_scores(fm, 2);
  const int draws = 100000;
  VectorXd hits = VectorXd::Zero(5);
  for (int r = 0; r < draws; ++r) {
    auto res = css_select(CssMethod::Dpp, fm, 2, 2, rng);
    REQUIRE(res.columns.size() == 2);
    for (Index i : res.columns) hits(i) += 1.0;
  }
  for (Index i = 0; i < 5; ++i)
    CHECK(std::abs(hits(i) / draws - lev(i)) < 3.0 * std::sqrt(lev(i) * (1 - lev(i)) / draws));

  MatrixXd z = gaussian(6, 5, rng);
  z.col(3).setZero();
  FeatureMatrix fz(z);
  for (int r = 0; r < 5000; ++r) {
    auto res = css_select(CssMethod::Volume, fz, 2, 2, rng);
    CHECK(std::find(res.columns.begin(), res.columns.end(), Index{3}) == res.columns.end());
  }

  MatrixXd eq = gaussian(5, 4, rng);
  for (Index j = 0; j < 4; ++j) eq.col(j).normalize();
  FeatureMatrix fe(eq);
  std::vector<double> c(4, 0.0);
  for (int r = 0; r < 40000; ++r) c[css_select(CssMethod::LengthSquared, fe, 1, 1, rng).columns[0]] += 1;
  CHECK(stats::chi_square_gof(c, {0.25, 0.25, 0.25, 0.25}).p_value > 0.01);

  CHECK_THROWS_AS(css_select(CssMethod::Volume, fm, 2, 3, rng), std::invalid_argument);
  CHECK_THROWS_AS(css_select(CssMethod::Leverage, fm, 2, 1, rng), std::invalid_argument);
}

TEST_CASE("expected error bounds on random 6x5 matrices") {
  Rng rng(4);
  const Index k = 2, d = 5;
  for (int t = 0; t < 20; ++t) {
    FeatureMatrix fm(gaussian(6, d, rng));
    const double opt = fm.optimal_error(k);
    const double vs = expected_error_exact(CssMethod::Volume, fm, k);
    const double dpp = expected_error_exact(CssMethod::Dpp, fm, k);
    CHECK(vs <= (k + 1) * opt);
    CHECK(dpp <= k * (d + 1 - k) * opt);
    for (auto m : {CssMethod::LengthSquared, CssMethod::Leverage, CssMethod::Volume, CssMethod::Dpp})
      CHECK(expected_error_exact(m, fm, k) >= opt - 1e-9);
    VectorXd marg = css_law(CssMethod::Dpp, fm, k).marginals();
    CHECK((marg - leverage_scores(fm, k)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("flat tail bound for projection DPP selection") {
  Rng rng(5);
  const Index k = 2, d = 6;
  for (int t = 0; t < 5; ++t) {
    VectorXd s(5);
    s << 4.0 + rng.uniform(), 2.5 + rng.uniform(), 1.0, 1.0, 1.0;
    FeatureMatrix fm(with_spectrum(8, d, s, rng));
    Flatness f = flatness_and_sparsity(fm, k);
    CHECK(f.beta == doctest::Approx((d - k) / 3.0).epsilon(1e-10));
    CHECK(f.sparsity == d);
    const double bound = 1.0 + f.beta * double(f.sparsity - k) / double(d - k) * k;
    CHECK(expected_error_exact(CssMethod::Dpp, fm, k) <= bound * fm.optimal_error(k));
  }
}

TEST_CASE("flatness and sparsity examples") {
  Rng rng(6);
  const Index d = 6, k = 2;
  VectorXd flat(6);
  flat << 3, 2, 1, 1, 1, 1;
  CHECK(flatness_and_sparsity(FeatureMatrix(with_spectrum(8, d, flat, rng)), k).beta ==
        doctest::Approx(1.0).epsilon(1e-10));
  VectorXd spike(3);
  spike << 3, 2, 1;
  Flatness f = flatness_and_sparsity(FeatureMatrix(with_spectrum(8, d, spike, rng)), k);
  CHECK(f.beta == doctest::Approx(double(d - k)).epsilon(1e-10));
  CHECK(flatness_and_sparsity(FeatureMatrix(gaussian(8, d, rng)), k).sparsity == d);
  VectorXd two(2);
  two << 3, 2;
  CHECK(flatness_and_sparsity(FeatureMatrix(with_spectrum(8, d, two, rng)), k).tail_zero);
  for (int t = 0; t < 20; ++t) {
    Flatness g = flatness_and_sparsity(FeatureMatrix(gaussian(7, d, rng)), k);
    CHECK(g.beta >= 1.0 - 1e-12);
    CHECK(g.beta <= d - k + 1e-12);
  }
}

TEST_CASE("samplers agree with their enumerated laws") {
  Rng rng(7);
  FeatureMatrix fm(gaussian(6, 5, rng));
  const Index k = 2;
  for (auto m : {CssMethod::LengthSquared, CssMethod::Leverage, CssMethod::Volume, CssMethod::Dpp}) {
    auto law = css_law(m, fm, k);
    double total = 0.0;
    for (double p : law.probabilities()) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> counts(law.probabilities().size(), 0.0);
    for (int r = 0; r < 100000; ++r) counts[to_mask(css_select(m, fm, k, k, rng).columns)] += 1.0;
    CHECK(stats::chi_square_gof(counts, law.probabilities()).p_value > 0.01);
  }
}

TEST_CASE("volume normalizer equals the elementary symmetric polynomial") {
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    MatrixXd x = gaussian(7, 6, rng);
    FeatureMatrix fm(x);
    const VectorXd s2 = fm.sigma().array().square();
    for (Index k = 1; k <= 4; ++k) {
      const double lhs = volume_normalizer(x, k);
      CHECK(std::abs(lhs - esp(s2, k)) <= 1e-8 * esp(s2, k));
    }
  }
}
