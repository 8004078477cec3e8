#include <doctest.h>

#include <bit>
#include <cmath>
#include <numbers>

#include "negdep/pruning.hpp"
#include "negdep/stats.hpp"

using namespace negdep;

namespace {

std::vector<int> random_sizes(Rng& rng, int max_units) {
  std::vector<int> sizes;
  int total = 0;
  while (true) {
    const int s = 1 + static_cast<int>(rng.below(4));
    if (total + s > max_units) break;
    sizes.push_back(s);
    total += s;
    if (sizes.size() >= 2 && rng.uniform() < 0.3) break;
  }
  return sizes;
}

VectorXd random_vec(Index n, Rng& rng) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

TwoLayerNet random_net(Index units, Index n, Rng& rng) {
  TwoLayerNet net;
  net.w.resize(units, n);
  for (Index i = 0; i < units; ++i)
    for (Index j = 0; j < n; ++j) net.w(i, j) = rng.normal();
  net.v = random_vec(units, rng);
  return net;
}

}  // namespace

TEST_CASE("i2: closed-form values, symmetry, oddness, bound") {
  CHECK(std::abs(i2(1.0, 1.0, 1.0) - 1.0 / 6.0) < 1e-12);
  CHECK(i2(0.0, 0.7, 2.0) == 0.0);
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const double a = rng.uniform(0.0, 3.0), b = rng.uniform(0.0, 3.0);
    const double q = rng.uniform(-1.0, 1.0) * std::sqrt(a * b);
    CHECK(i2(q, a, b) == doctest::Approx(i2(q, b, a)).epsilon(1e-15));
    CHECK(i2(-q, a, b) == doctest::Approx(-i2(q, a, b)).epsilon(1e-15));
    CHECK(std::abs(i2(q, a, b)) <= 0.5);
  }
  CHECK_THROWS_AS(i2(3.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(i2(0.1, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("generalization error: zero at reconstruction, matches input-space Monte Carlo") {
  Rng rng(2);
  SUBCASE("perfect reconstruction from actual weights") {
    for (int t = 0; t < 10; ++t) {
      const GroupPartition g = GroupPartition::from_sizes(random_sizes(rng, 12));
      const VectorXd vs = random_vec(g.groups(), rng);
      const GroupedConfig c = make_grouped_config(g, vs, 20, rng);
      const MacroParams m = macro_from_nets(c.student, c.teacher);
      CHECK(std::abs(generalization_error(c.student.v, vs, m)) < 1e-10);
      CHECK((m.Q - c.macro.Q).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("student equals teacher") {
    const TwoLayerNet t = random_net(4, 6, rng);
    CHECK(std::abs(generalization_error(t.v, t.v, macro_from_nets(t, t))) < 1e-12);
  }
  SUBCASE("nonnegative on random networks") {
    for (int t = 0; t < 50; ++t) {
      const TwoLayerNet s = random_net(1 + static_cast<Index>(rng.below(5)), 5, rng);
      const TwoLayerNet tt = random_net(1 + static_cast<Index>(rng.below(4)), 5, rng);
      CHECK(generalization_error(s.v, tt.v, macro_from_nets(s, tt)) >= -1e-10);
    }
  }
  SUBCASE("Monte Carlo over Gaussian inputs") {
    for (int t = 0; t < 2; ++t) {
      const TwoLayerNet s = random_net(3, 6, rng);
      const TwoLayerNet tt = random_net(2, 6, rng);
      const double exact = generalization_error(s.v, tt.v, macro_from_nets(s, tt));
      const McEstimate mc = generalization_error_mc(s, tt, 1000000, rng);
      CHECK(std::abs(mc.mean - exact) < 3.0 * mc.stderr_);
    }
  }
  SUBCASE("shape mismatch") {
    const MacroParams m = grouped_macro(GroupPartition::from_sizes({2, 1}));
    CHECK_THROWS_AS(generalization_error(VectorXd::Zero(2), VectorXd::Zero(2), m), std::invalid_argument);
  }
}

TEST_CASE("v dynamics: stationarity, explicit linear solution, group sums") {
  Rng rng(3);
  SUBCASE("fixed point has zero drift") {
    const GroupPartition g = GroupPartition::from_sizes({3, 1, 2});
    const VectorXd vs = random_vec(3, rng);
    const GroupedConfig c = make_grouped_config(g, vs, 10, rng);
    CHECK(v_drift(c.student.v, vs, c.macro, 1.0).norm() < 1e-14);
    const VTrajectory tr = v_dynamics(c.student.v, vs, c.macro);
    CHECK(tr.converged);
    CHECK(tr.steps == 0);
  }
  SUBCASE("identity pattern follows the discrete linear solution") {
    const GroupPartition g = GroupPartition::from_sizes({1, 1, 1, 1});
    const MacroParams m = grouped_macro(g);
    const VectorXd vs = random_vec(4, rng);
    const VectorXd v0 = random_vec(4, rng);
    VDynamicsOptions opt;
    opt.eta = 2.5;
    opt.record_every = 500;
    const VTrajectory tr = v_dynamics(v0, vs, m, opt);
    CHECK(tr.converged);
    // dv/dt = -(eta / 6)(v - v*), dt = 0.01 / eta
    const double rho = 1.0 - 0.01 / 6.0;
    for (std::size_t r = 1; r + 1 < tr.path.size(); ++r) {
      const VectorXd expect = vs + (v0 - vs) * std::pow(rho, 500.0 * static_cast<double>(r));
      CHECK((tr.path[r] - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK((tr.final_v - vs).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("grouped configuration: group sums converge to v*") {
    for (int t = 0; t < 5; ++t) {
      const GroupPartition g = GroupPartition::from_sizes(random_sizes(rng, 10));
      const VectorXd vs = random_vec(g.groups(), rng);
      const VectorXd v0 = random_vec(g.units(), rng);
      const VTrajectory tr = v_dynamics(v0, vs, grouped_macro(g));
      REQUIRE(tr.converged);
      VectorXd sums = VectorXd::Zero(g.groups());
      for (Index i = 0; i < g.units(); ++i) sums(g.group_of[static_cast<std::size_t>(i)]) += tr.final_v(i);
      CHECK((sums - vs).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("divergence is reported") {
    MacroParams m;
    m.Q.resize(2, 2);
    m.Q << 0.0, 0.9, 0.9, 0.0;
    m.R = MatrixXd::Zero(2, 1);
    m.T = MatrixXd::Identity(1, 1);
    VectorXd v0(2);
    v0 << 1.0, 0.0;
    CHECK_THROWS_AS(v_dynamics(v0, VectorXd::Zero(1), m), NumericalError);
  }
}

TEST_CASE("divnet prune: duplicates never co-selected, full selection") {
  Rng rng(4);
  const GroupPartition g = GroupPartition::from_sizes({3, 2, 1, 2});
  const GroupedConfig c = make_grouped_config(g, random_vec(4, rng), 12, rng);
  const MatrixXd feats = c.student.w / std::sqrt(12.0);
  int violations = 0;
  for (int t = 0; t < 100000; ++t) {
    const std::vector<Index> s = divnet_prune(feats, 0.7, 0.0, 3, rng);
    REQUIRE(s.size() == 3);
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b)
        violations += g.group_of[static_cast<std::size_t>(s[a])] == g.group_of[static_cast<std::size_t>(s[b])];
  }
  CHECK(violations == 0);
  const std::vector<Index> all = divnet_prune(feats, 0.7, 0.0, g.units(), rng);
  CHECK(all.size() == static_cast<std::size_t>(g.units()));
  CHECK_THROWS_AS(divnet_prune(feats, 0.7, 0.0, 9, rng), std::invalid_argument);
}

TEST_CASE("theory kernels: within-group pairs have probability exactly zero") {
  const GroupPartition g = GroupPartition::from_sizes({2, 3, 1});
  const MacroParams m = grouped_macro(g);
  const MatrixXd lg = theory_kernel(m.Q, TheoryKernel::Gaussian, 0.8);
  // exp(-2 beta (1 - Q)) equals exp(-beta |w_i - w_j|^2 / N) for unit-norm scaled rows
  CHECK(std::abs(lg(0, 2) - std::exp(-1.6)) < 1e-15);
  CHECK(lg(0, 1) == 1.0);
  for (TheoryKernel kind : {TheoryKernel::Gram, TheoryKernel::Gaussian}) {
    const SubsetDistribution law = kdpp_law(theory_kernel(m.Q, kind, 0.8), 2);
    for (Index i = 0; i < g.units(); ++i)
      for (Index j = i + 1; j < g.units(); ++j)
        if (g.group_of[static_cast<std::size_t>(i)] == g.group_of[static_cast<std::size_t>(j)])
          CHECK(law[(std::uint64_t{1} << i) | (std::uint64_t{1} << j)] == 0.0);
  }
  CHECK_THROWS_AS(kdpp_law(m.Q, 4), std::invalid_argument);
}

TEST_CASE("reweighting: identity, grouped error formula, least squares") {
  Rng rng(5);
  const GroupPartition g = GroupPartition::from_sizes({2, 3, 1, 2});
  const VectorXd vs = random_vec(4, rng);
  const GroupedConfig c = make_grouped_config(g, vs, 10, rng);

  std::vector<Index> all;
  for (Index i = 0; i < g.units(); ++i) all.push_back(i);
  CHECK((reweight_groups(all, g, c.student.v) - c.student.v).cwiseAbs().maxCoeff() < 1e-14);

  // Every selection: the general formula after reweighting equals the unexplained sum.
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << g.units()); ++mask) {
    const std::vector<Index> s = from_mask(mask);
    const VectorXd vt = reweight_groups(s, g, c.student.v);
    const double general = pruned_error(s, vt, vs, c.macro);
    const double grouped = pruned_error_grouped(mask, g, vs);
    CHECK(std::abs(general - grouped) < 1e-12);
  }
  std::uint64_t explained_all = 0b01100101;  // units 0, 2, 5, 6 cover every group
  CHECK(pruned_error_grouped(explained_all, g, vs) == 0.0);

  SUBCASE("least squares on activations") {
    MatrixXd x(200, 10);
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    MatrixXd act(200, g.units());
    const MatrixXd h = x * c.student.w.transpose() / std::sqrt(10.0);
    for (Index i = 0; i < h.rows(); ++i)
      for (Index j = 0; j < h.cols(); ++j) act(i, j) = erf_activation(h(i, j));
    const LeastSquaresReweight full = reweight_least_squares(all, act, c.student.v);
    CHECK(full.rank_deficient);  // duplicated units give identical columns
    CHECK((act * full.v_tilde - act * c.student.v).norm() < 1e-9);
    const std::vector<Index> s = {0, 2, 5, 6};
    const LeastSquaresReweight one = reweight_least_squares(s, act, c.student.v);
    CHECK_FALSE(one.rank_deficient);
    CHECK((one.v_tilde - reweight_groups(s, g, c.student.v)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK_THROWS_AS(reweight_least_squares({}, act, c.student.v), std::invalid_argument);
  }
}

TEST_CASE("DPP pruning beats matched-marginal laws exactly") {
  Rng rng(6);
  int configs = 0;
  for (int t = 0; t < 24; ++t) {
    const std::vector<int> sizes = random_sizes(rng, 12);
    const GroupPartition g = GroupPartition::from_sizes(sizes);
    const VectorXd vs = random_vec(g.groups(), rng);
    const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(g.groups())));
    const TheoryKernel kind = t % 2 == 0 ? TheoryKernel::Gram : TheoryKernel::Gaussian;
    const PruneComparison cmp = compare_pruning(g, vs, k, kind, 0.5);
    CHECK(cmp.e_dpp <= cmp.e_bernoulli + 1e-12);
    CHECK(cmp.e_dpp <= cmp.e_conditional_poisson + 1e-12);
    const bool multi = *std::max_element(sizes.begin(), sizes.end()) >= 2;
    if (multi) CHECK(cmp.e_bernoulli - cmp.e_dpp > 1e-12);

    // Independent oracle: Bernoulli unexplained probability is a product.
    const SubsetDistribution law = kdpp_law(theory_kernel(grouped_macro(g).Q, kind, 0.5), k);
    const VectorXd p = law.marginals();
    const VectorXd u_dpp = unexplained_probabilities(law, g);
    const VectorXd u_bern = unexplained_probabilities(bernoulli_law(p), g);
    const auto mem = g.members();
    for (int m = 0; m < g.groups(); ++m) {
      double prod = 1.0, sum = 0.0;
      for (Index i : mem[static_cast<std::size_t>(m)]) {
        prod *= 1.0 - p(i);
        sum += p(i);
      }
      CHECK(std::abs(u_bern(m) - prod) < 1e-12);
      CHECK(std::abs(u_dpp(m) - (1.0 - sum)) < 1e-12);  // the union bound is tight for the DPP
    }
    ++configs;
  }
  CHECK(configs >= 20);
}

TEST_CASE("singleton groups with full selection: laws coincide") {
  const GroupPartition g = GroupPartition::from_sizes({1, 1, 1, 1, 1});
  const SubsetDistribution dpp = kdpp_law(grouped_macro(g).Q, 5);
  const SubsetDistribution bern = bernoulli_law(dpp.marginals());
  CHECK(stats::total_variation(dpp.probabilities(), bern.probabilities()) < 1e-15);
  Rng rng(7);
  const VectorXd vs = random_vec(5, rng);
  CHECK(expected_pruned_error(dpp, g, vs) == 0.0);
}

TEST_CASE("conditional Poisson fit and marginal checks") {
  VectorXd p(6);
  p << 0.2, 0.5, 0.9, 0.4, 0.7, 0.3;
  const SubsetDistribution cp = conditional_poisson_law(p, 3);
  CHECK((cp.marginals() - p).cwiseAbs().maxCoeff() < 1e-9);
  const auto card = cp.cardinality();
  CHECK(std::abs(card[3] - 1.0) < 1e-12);
  CHECK_THROWS_AS(conditional_poisson_law(p, 2), std::invalid_argument);
  CHECK_THROWS_AS(check_matched_marginals(cp, bernoulli_law(VectorXd::Constant(6, 0.5))), std::invalid_argument);
  CHECK(check_matched_marginals(cp, bernoulli_law(p)) < 1e-9);
}

TEST_CASE("group partition parsing") {
  const GroupPartition g = GroupPartition::parse("2,1,3");
  CHECK(g.units() == 6);
  CHECK(g.groups() == 3);
  CHECK(g.group_of[5] == 2);
  CHECK_THROWS_AS(GroupPartition::parse("2,0"), std::invalid_argument);
  CHECK_THROWS_AS(GroupPartition::parse("2,x"), std::invalid_argument);
  CHECK_THROWS_AS(GroupPartition::parse(""), std::invalid_argument);
}
