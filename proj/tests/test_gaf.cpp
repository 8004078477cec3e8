#include <doctest.h>

#include <cmath>
#include <numbers>

#include "negdep/gaf.hpp"
#include "negdep/point_pattern.hpp"
#include "negdep/stats.hpp"

using namespace negdep;

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Hermite rule for the weight exp(-x^2): Golub-Welsch nodes,
// Christoffel weights 1 / sum_k p_k(x)^2 from the orthonormal recurrence.
std::pair<VectorXd, VectorXd> gauss_hermite(int n) {
  MatrixXd j = MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  const VectorXd x = Eigen::SelfAdjointEigenSolver<MatrixXd>(j).eigenvalues();
  VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    double p0 = std::pow(kPi, -0.25), p1 = std::sqrt(2.0) * x(i) * p0, s = p0 * p0;
    for (int k = 1; k < n; ++k) {
      s += p1 * p1;
      const double p2 = (x(i) * p1 - std::sqrt(k / 2.0) * p0) / std::sqrt((k + 1) / 2.0);
      p0 = p1;
      p1 = p2;
    }
    w(i) = 1.0 / s;
  }
  return {x, w};
}

PointPattern zeros_pattern(const std::vector<cplx>& z, double radius) {
  PointPattern p;
  p.window = Window::ball(VectorXd::Zero(2), radius);
  p.points.resize(static_cast<Index>(z.size()), 2);
  for (std::size_t i = 0; i < z.size(); ++i) p.points.row(static_cast<Index>(i)) << z[i].real(), z[i].imag();
  return p;
}

}  // namespace

TEST_CASE("gaf weights and covariance") {
  CHECK(gaf_weights(GafModel::Planar, 1.0, 1)(0) == 1.0);
  const VectorXd sph = gaf_weights(GafModel::Spherical, 4, 5);
  CHECK(sph(2) * sph(2) == doctest::Approx(6.0).epsilon(1e-13));
  const VectorXd hyp = gaf_weights(GafModel::Hyperbolic, 2.0, 4);
  CHECK(hyp(3) * hyp(3) == doctest::Approx(4.0).epsilon(1e-13));

  Rng rng(21);
  const cplx z(0.6, -0.3), w(-0.2, 0.5);
  const int draws = 10000;
  std::vector<double> re, im, v0;
  for (int t = 0; t < draws; ++t) {
    GafSeries f = sample_gaf(GafModel::Planar, 1.0, 1.0, rng);
    const cplx p = f.eval(z) * std::conj(f.eval(w));
    re.push_back(p.real());
    im.push_back(p.imag());
    v0.push_back(std::norm(f.eval(0.0)));
  }
  const cplx expect = std::exp(z * std::conj(w));
  CHECK(std::abs(stats::mean(re) - expect.real()) < 3 * std::sqrt(stats::variance(re) / draws));
  CHECK(std::abs(stats::mean(im) - expect.imag()) < 3 * std::sqrt(stats::variance(im) / draws));
  CHECK(std::abs(stats::mean(v0) - 1.0) < 3 * std::sqrt(stats::variance(v0) / draws));

  CHECK_THROWS_AS(sample_gaf(GafModel::Planar, 1.0, 2.0, rng, 32), std::invalid_argument);
  CHECK_THROWS_AS(sample_gaf(GafModel::Spherical, 1.5, 2.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_gaf(GafModel::Hyperbolic, 1.0, 0.8, rng), std::invalid_argument);
  CHECK(gaf_min_truncation(GafModel::Planar, 1.0, 4.0) == static_cast<Index>(std::ceil(16 * 4 * std::numbers::e)));
}

TEST_CASE("zeros: monomial, spherical degree one, polish and argument principle") {
  GafSeries mono;
  mono.coeffs = VectorXc::Zero(64);
  mono.coeffs(1) = cplx(0.3, 1.2);
  auto z0 = find_zeros(mono, 1.0);
  REQUIRE(z0.size() == 1);
  CHECK(std::abs(z0[0]) < 1e-15);

  Rng rng(22);
  GafSeries lin = sample_gaf(GafModel::Spherical, 1, 1.0, rng);
  CHECK(lin.truncation() == 2);
  auto zl = find_zeros(lin, 1e6);
  REQUIRE(zl.size() == 1);
  CHECK(std::abs(zl[0] + lin.coeffs(0) / lin.coeffs(1)) < 1e-9 * std::max(1.0, std::abs(zl[0])));

  double total = 0.0;
  const int draws = 1000;
  for (int t = 0; t < draws; ++t) {
    GafSeries f = sample_gaf(GafModel::Planar, 1.0, 2.0, rng);
    auto zs = find_zeros(f, 2.0);
    for (cplx z : zs) CHECK(std::abs(f.eval(z)) < 1e-8);
    const int wind = count_zeros_argument(f, 0.0, 2.0);
    CHECK(static_cast<int>(zs.size()) == wind);
    total += static_cast<double>(zs.size());
  }
  CHECK(std::abs(total / draws - 4.0) / 4.0 < 0.05);

  GafSeries zero;
  zero.coeffs = VectorXc::Zero(64);
  CHECK_THROWS_AS(find_zeros(zero, 1.0), NumericalError);
  GafSeries small = sample_gaf(GafModel::Planar, 1.0, 1.0, rng);
  CHECK_THROWS_AS(find_zeros(small, 3.0), std::invalid_argument);
}

TEST_CASE("zeros are stable under doubled truncation") {
  Rng rng(23);
  for (int t = 0; t < 20; ++t) {
    GafSeries big = sample_gaf(GafModel::Planar, 1.0, 2.5, rng, 2 * gaf_min_truncation(GafModel::Planar, 1.0, 2.5));
    GafSeries cut = big;
    cut.coeffs = big.coeffs.head(gaf_min_truncation(GafModel::Planar, 1.0, 2.5));
    auto a = find_zeros(cut, 2.5), b = find_zeros(big, 2.5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
  }
}

TEST_CASE("planar zero intensity is translation invariant") {
  Rng rng(24);
  const int draws = 400;
  std::vector<double> c0, c1;
  const cplx shift(1.5, -1.0);
  for (int t = 0; t < draws; ++t) {
    GafSeries f = sample_gaf(GafModel::Planar, 1.0, 3.0, rng);
    double n0 = 0, n1 = 0;
    for (cplx z : find_zeros(f, 3.0)) {
      n0 += std::abs(z) <= 1.0;
      n1 += std::abs(z - shift) <= 1.0;
    }
    c0.push_back(n0);
    c1.push_back(n1);
  }
  const double se = std::sqrt((stats::variance(c0) + stats::variance(c1)) / draws);
  CHECK(std::abs(stats::mean(c0) - stats::mean(c1)) < 3 * se);
  CHECK(std::abs(stats::mean(c0) - 1.0) < 3 * std::sqrt(stats::variance(c0) / draws));
}

TEST_CASE("hyperbolic L=1 zero density matches the Bergman intensity") {
  Rng rng(25);
  const int draws = 1000;
  const double r = 0.5;
  std::vector<double> c;
  for (int t = 0; t < draws; ++t) c.push_back(static_cast<double>(find_zeros(sample_gaf(GafModel::Hyperbolic, 1.0, r, rng), r).size()));
  const double expect = r * r / (1 - r * r);
  CHECK(std::abs(stats::mean(c) - expect) < 3 * std::sqrt(stats::variance(c) / draws));
}

TEST_CASE("pair-in-disk repulsion of planar zeros") {
  Rng rng(26);
  const std::vector<double> eps{0.3, 0.4, 0.5};
  std::vector<double> gaf(eps.size(), 0.0), poi(eps.size(), 0.0);
  const int draws = 300;
  const double R = 4.0;
  for (int t = 0; t < draws; ++t) {
    PointPattern z = zeros_pattern(find_zeros(sample_gaf(GafModel::Planar, 1.0, R, rng), R), R);
    PointPattern p = sample_poisson(z.window, 1.0 / kPi, rng);
    for (std::size_t e = 0; e < eps.size(); ++e) {
      gaf[e] += pair_in_ball_fraction(z, eps[e], 4);
      poi[e] += pair_in_ball_fraction(p, eps[e], 4);
    }
  }
  const double sg = stats::fit_loglog(eps, gaf).slope;
  const double sp = stats::fit_loglog(eps, poi).slope;
  CHECK(sg > sp + 1.0);
  CHECK(std::abs(sg - 6.0) < 1.0);
  CHECK(std::abs(sp - 4.0) < 0.5);
}

TEST_CASE("hermite functions: closed form, parity, orthonormality, Bargmann") {
  for (double x : {-1.0, 0.0, 0.3, 2.0})
    CHECK(hermite_function(0, x) == doctest::Approx(std::pow(2.0, 0.25) * std::exp(-kPi * x * x)).epsilon(1e-15));
  for (int k = 1; k <= 21; k += 2) CHECK(std::abs(hermite_function(k, 0.0)) < 1e-15);

  auto [nodes, weights] = gauss_hermite(60);
  // Substituting x = t / sqrt(2 pi) turns exp(-2 pi x^2) into exp(-t^2).
  MatrixXd gram = MatrixXd::Zero(21, 21);
  for (Index i = 0; i < nodes.size(); ++i) {
    const double x = nodes(i) / std::sqrt(2 * kPi);
    const VectorXd h = hermite_functions(20, x) / (std::pow(2.0, 0.25) * std::exp(-kPi * x * x));
    gram += weights(i) * std::sqrt(2.0) * h * h.transpose() / std::sqrt(2 * kPi);
  }
  CHECK((gram - MatrixXd::Identity(21, 21)).cwiseAbs().maxCoeff() < 1e-8);

  // B h_k(z) = pi^(k/2) / sqrt(k!) z^k at real z by the same quadrature.
  for (int k : {0, 1, 3, 6})
    for (double z : {-0.4, 0.25, 0.7}) {
      double b = 0.0;
      for (Index i = 0; i < nodes.size(); ++i) {
        const double x = nodes(i) / std::sqrt(2 * kPi);
        const double rest = hermite_function(k, x) * std::exp(2 * kPi * x * z - kPi * x * x - 0.5 * kPi * z * z);
        b += weights(i) * rest * std::exp(2 * kPi * x * x) / std::sqrt(2 * kPi);
      }
      b *= std::pow(2.0, 0.25);
      const double expect = std::pow(kPi, k / 2.0) / std::sqrt(std::tgamma(k + 1.0)) * std::pow(z, k);
      CHECK(b == doctest::Approx(expect).epsilon(1e-9).scale(1e-12));
    }
  CHECK_THROWS_AS(hermite_function(61, 0.0), std::invalid_argument);
}

TEST_CASE("stft of hermite functions: value at 0, supremum and maximizer") {
  CHECK(stft_hermite(0, 0.0) == cplx(1.0));
  CHECK(stft_hermite_sup_closed(0) == 1.0);
  for (int k = 1; k <= 6; ++k) {
    const SupSearch s = stft_hermite_sup_search(k);
    CHECK(std::abs(s.value - stft_hermite_sup_closed(k)) < 1e-10);
    CHECK(std::abs(s.radius - std::sqrt(k / kPi)) < 1e-6);
    const double direct = std::exp(-k / 2.0) * std::pow(k, k / 2.0) / std::sqrt(std::tgamma(k + 1.0));
    CHECK(stft_hermite_sup_closed(k) == doctest::Approx(direct).epsilon(1e-13));
  }
  // Modulus only depends on |z|.
  CHECK(std::abs(stft_hermite(3, cplx(0.3, 0.4))) == doctest::Approx(std::abs(stft_hermite(3, cplx(0.5, 0.0)))));
}

TEST_CASE("white noise stft: unit variance scaling and Var = pi") {
  Rng rng(27);
  const cplx pts[] = {{0.0, 0.0}, {1.2, -0.7}, {-2.0, 1.5}};
  const int draws = 10000;
  for (cplx z : pts) {
    std::vector<double> v;
    for (int t = 0; t < draws; ++t) v.push_back(std::norm(stft_whitenoise(whitenoise_terms(3.0), rng).eval(z)));
    CHECK(std::abs(stats::mean(v) - kPi) < 3 * std::sqrt(stats::variance(v) / draws));
  }
  WhiteNoiseStft w = stft_whitenoise(40, rng);
  for (Index j = 0; j < w.coeffs.size(); ++j) CHECK(w.coeffs(j).imag() == 0.0);
  GafSeries g = w.analytic_part();
  CHECK(std::abs(g.coeffs(5) - w.coeffs(5) * std::sqrt(std::pow(kPi, 5) / 120.0)) < 1e-14);
  CHECK_THROWS_AS(stft_whitenoise(15, rng), std::invalid_argument);
}

TEST_CASE("real white noise zeros avoid the real axis neighbourhood") {
  Rng rng(28);
  const double R = 1.5;
  double near_real = 0.0, near_complex = 0.0;
  for (int t = 0; t < 250; ++t) {
    for (bool cx : {false, true}) {
      GafSeries g = stft_whitenoise(whitenoise_terms(R), rng, cx).analytic_part();
      for (cplx z : find_zeros(g, R)) {
        const double y = std::abs(z.imag());
        if (y > 1e-7 && y < 0.15) (cx ? near_complex : near_real) += 1.0;
      }
    }
  }
  CHECK(near_real < 0.5 * near_complex);
}

TEST_CASE("detection: noise rarely rejects, strong signal always does, masks nest") {
  Rng rng(29);
  const double L = kPi;
  const int k = 2;
  DetectionOptions opt;
  opt.resolution = 60;
  const Index terms = whitenoise_terms(std::sqrt(2.0) * L);
  int noise_rej = 0;
  for (int t = 0; t < 50; ++t) noise_rej += detect_signal(stft_whitenoise(terms, rng), k, L, opt).reject_noise;
  CHECK(noise_rej / 50.0 <= std::min(1.0, noise_tail_level(L, opt.tau)));

  const double lambda = 10.0 * detection_lambda_bound(k, L, opt.K, opt.tau);
  int sig_rej = 0, contained = 0;
  for (int t = 0; t < 200; ++t) {
    DetectionResult r = detect_signal(noisy_hermite(k, lambda, terms, rng), k, L, opt, lambda);
    sig_rej += r.reject_noise;
    contained += (r.level_set.array() <= r.signal_region.array()).all();
    CHECK(r.alpha <= 0.2 + 1e-12);
  }
  CHECK(sig_rej >= 190);
  CHECK(contained >= 190);

  DetectionResult r = detect_signal(noisy_hermite(k, 20.0, terms, rng), k, L, opt);
  for (double a : {1.0, 2.0, 4.0, 8.0}) CHECK((r.grid.mask(2 * a).array() <= r.grid.mask(a).array()).all());
  CHECK_THROWS_AS(detect_signal(stft_whitenoise(terms, rng), k, 3.0, opt), std::invalid_argument);
}

TEST_CASE("level sets agree across refinement") {
  Rng rng(30);
  WhiteNoiseStft f = noisy_hermite(3, 15.0, whitenoise_terms(6.0), rng);
  SpectrogramGrid coarse = spectrogram(f, 4.0, 200), fine = spectrogram(f, 4.0, 400);
  const double a = 3.0;
  const BoolMatrix mc = coarse.mask(a), mf = fine.mask(a);
  int agree = 0;
  for (int r = 0; r < 400; ++r)
    for (int c = 0; c < 400; ++c) agree += mf(r, c) == mc(r / 2, c / 2);
  CHECK(agree >= 0.99 * 400 * 400);
}
