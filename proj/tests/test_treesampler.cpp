#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "negdep/stats.hpp"
#include "negdep/treesampler.hpp"
#include "oracles.hpp"

using namespace negdep;

namespace {

MatrixXd random_factor(int r, int n, Rng& rng) {
  MatrixXd b(r, n);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.normal();
  return b;
}

void check_additivity(const SampleTree& t) {
  for (const auto& nd : t.nodes) {
    if (nd.leaf()) continue;
    const auto& l = t.nodes[nd.left];
    const auto& r = t.nodes[nd.right];
    CHECK((nd.z - l.z - r.z).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((nd.A - l.A - r.A).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(l.lo == nd.lo);
    CHECK(r.hi == nd.hi);
    CHECK(l.hi == r.lo);
    CHECK(l.hi - l.lo == (nd.hi - nd.lo + 1) / 2);
  }
}

}  // namespace

TEST_CASE("single item tree") {
  MatrixXd b(1, 1);
  b << 2.0;
  auto t = construct_tree(LowRankFactor(b));
  REQUIRE(t.nodes.size() == 1);
  CHECK(t.nodes[0].leaf());
  CHECK(std::abs(t.nodes[0].z[0] - t.gamma[0] * t.G(0, 0) * t.G(0, 0)) < 1e-15);
  CHECK(std::abs(t.nodes[0].A(0, 0) - t.H(0, 0) * t.H(0, 0)) < 1e-15);
}

TEST_CASE("identity factor gives orthogonal G and unit gamma") {
  auto t = construct_tree(LowRankFactor(MatrixXd::Identity(4, 4)));
  CHECK((t.gamma - VectorXd::Ones(4)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((t.G * t.G.transpose() - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
  check_additivity(t);
}

TEST_CASE("tree invariants and leaf contents") {
  Rng rng(1);
  for (int n : {1, 2, 3, 7, 8, 13, 64}) {
    const int r = std::min(n, 3);
    auto t = construct_tree(LowRankFactor(random_factor(r, n, rng)));
    check_additivity(t);
    CHECK(t.depth() <= static_cast<int>(std::ceil(std::log2(n))) + 1);
    VectorXd leafsum = VectorXd::Zero(r);
    for (const auto& nd : t.nodes) {
      if (!nd.leaf()) continue;
      const Index j = nd.lo;
      CHECK((nd.z - t.gamma.cwiseProduct(t.G.col(j).cwiseAbs2())).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((nd.A - t.H.col(j) * t.H.col(j).transpose()).cwiseAbs().maxCoeff() < 1e-14);
      leafsum += nd.z;
    }
    CHECK((leafsum - t.nodes[0].z).cwiseAbs().maxCoeff() < 1e-10);
  }
  MatrixXd deficient(2, 5);
  deficient.row(0) << 1, 2, 3, 4, 5;
  deficient.row(1) = 2.0 * deficient.row(0);
  CHECK_THROWS_AS(construct_tree(LowRankFactor(deficient)), std::invalid_argument);
}

TEST_CASE("conditional mass against the explicit projection kernel") {
  Rng rng(2);
  const int n = 9, r = 4;
  MatrixXd b = random_factor(r, n, rng);
  auto t = construct_tree(LowRankFactor(b));
  // Eigenvectors of L = B^T B from an independent dense eigensolver.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(b.transpose() * b);
  ConditionState st;
  st.E = {0, 2, 3};
  st.Q.resize(0, 0);
  MatrixXd v(n, 3);
  for (int c = 0; c < 3; ++c) v.col(c) = es.eigenvectors().col(n - r + st.E[c]);
  const MatrixXd k = v * v.transpose();
  CHECK(std::abs(conditional_mass(t, 0, st) - 3.0) < 1e-10);
  for (std::size_t id = 0; id < t.nodes.size(); ++id) {
    const auto& nd = t.nodes[id];
    double direct = 0.0;
    for (Index j = nd.lo; j < nd.hi; ++j) direct += k(j, j);
    CHECK(std::abs(conditional_mass(t, static_cast<Index>(id), st) - direct) < 1e-10);
  }
  // Condition on one item: its own leaf now carries no mass.
  extend_inverse(t, st, 4);
  for (std::size_t id = 0; id < t.nodes.size(); ++id) {
    const auto& nd = t.nodes[id];
    if (nd.leaf() && nd.lo == 4) CHECK(std::abs(conditional_mass(t, static_cast<Index>(id), st)) < 1e-12);
    if (!nd.leaf()) {
      const double parent = conditional_mass(t, static_cast<Index>(id), st);
      const double kids = conditional_mass(t, nd.left, st) + conditional_mass(t, nd.right, st);
      CHECK(std::abs(parent - kids) < 1e-9);
    }
  }
  CHECK(std::abs(conditional_mass(t, 0, st) - 2.0) < 1e-10);
}

TEST_CASE("extend_inverse keeps Q = K_Y^{-1}") {
  Rng rng(3);
  const int n = 12, r = 6;
  auto t = construct_tree(LowRankFactor(random_factor(r, n, rng)));
  ConditionState st;
  st.E = {0, 1, 2, 3, 4, 5};
  st.Q.resize(0, 0);
  for (Index y : {3, 7, 0, 11, 5}) {
    extend_inverse(t, st, y);
    const auto m = static_cast<Index>(st.Y.size());
    MatrixXd ky(m, m);
    for (Index a = 0; a < m; ++a)
      for (Index c = 0; c < m; ++c) ky(a, c) = projection_entry(t, st.E, st.Y[a], st.Y[c]);
    CHECK((st.Q * ky - MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("exact path law equals the L-ensemble") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 4 + trial % 5, r = 2 + trial % 3;
    MatrixXd b = random_factor(r, n, rng);
    auto t = construct_tree(LowRankFactor(b));
    auto law = tree_path_distribution(t);
    auto ref = oracle::l_ensemble_law(b.transpose() * b);
    for (std::size_t m = 0; m < ref.size(); ++m) CHECK(std::abs(law[m] - ref[m]) < 1e-8);
  }
}

TEST_CASE("sample_tree: diagonal case, sampler agreement, traversal bound") {
  Rng rng(5);
  auto id = construct_tree(LowRankFactor(MatrixXd::Identity(4, 4)));
  const int draws = 40000;
  VectorXd hits = VectorXd::Zero(4);
  for (int i = 0; i < draws; ++i)
    for (Index j : sample_tree(id, rng).items) hits[j] += 1.0;
  for (int j = 0; j < 4; ++j) CHECK(std::abs(hits[j] / draws - 0.5) < 3.0 * std::sqrt(0.25 / draws));

  const int n = 6, r = 3;
  MatrixXd b = random_factor(r, n, rng);
  auto t = construct_tree(LowRankFactor(b));
  auto l = LowRankFactor(b).likelihood();
  std::vector<double> ft(64, 0.0), fs(64, 0.0);
  const int m = 100000;
  const int bound_depth = static_cast<int>(std::ceil(std::log2(n))) + 1;
  bool within = true;
  for (int i = 0; i < m; ++i) {
    TreeSampleStats stats;
    auto s = sample_tree(t, rng, &stats);
    ft[to_mask(s.items)] += 1.0 / m;
    fs[to_mask(sample_spectral(l, rng).items)] += 1.0 / m;
    if (stats.nodes_visited > static_cast<long>(s.items.size()) * bound_depth) within = false;
  }
  CHECK(within);
  CHECK(stats::total_variation(ft, fs) < 0.02);
}

TEST_CASE("tree cache round trip") {
  Rng rng(6);
  auto t = construct_tree(LowRankFactor(random_factor(3, 10, rng)));
  const std::string path = "negdep_tree_cache_test.bin";
  save_tree(t, path);
  auto u = load_tree(path);
  std::remove(path.c_str());
  CHECK(u.nodes.size() == t.nodes.size());
  CHECK((u.G - t.G).cwiseAbs().maxCoeff() == 0.0);
  CHECK((u.H - t.H).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    CHECK(u.nodes[i].left == t.nodes[i].left);
    CHECK((u.nodes[i].A - t.nodes[i].A).cwiseAbs().maxCoeff() == 0.0);
  }
  Rng a(7), c(7);
  for (int i = 0; i < 10; ++i) CHECK(sample_tree(t, a).items == sample_tree(u, c).items);
  CHECK_THROWS_AS(load_tree("does-not-exist.bin"), std::invalid_argument);
}
