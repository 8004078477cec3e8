#include "negdep/treesampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

namespace negdep {

namespace {

Index build(SampleTree& t, Index lo, Index hi) {
  const auto id = static_cast<Index>(t.nodes.size());
  t.nodes.emplace_back();
  t.nodes[id].lo = lo;
  t.nodes[id].hi = hi;
  if (hi - lo == 1) {
    const auto g = t.G.col(lo);
    const auto h = t.H.col(lo);
    t.nodes[id].z = t.gamma.cwiseProduct(g.cwiseAbs2());
    t.nodes[id].A = h * h.transpose();
    return id;
  }
  const Index mid = lo + (hi - lo + 1) / 2;
  const Index l = build(t, lo, mid);
  const Index r = build(t, mid, hi);
  SampleTree::Node& n = t.nodes[id];
  n.left = l;
  n.right = r;
  n.z = t.nodes[l].z + t.nodes[r].z;
  n.A = t.nodes[l].A + t.nodes[r].A;
  return id;
}

// Masses below the floor are treated as zero. The floor sits above the pivot
// floor of extend_inverse, so any leaf that can be reached is also accepted.
constexpr double kMassFloor = 1e-12;
constexpr double kPivotFloor = 1e-13;

double clamped_mass(const SampleTree& t, Index id, const ConditionState& st) {
  const double m = conditional_mass(t, id, st);
  return m < kMassFloor ? 0.0 : m;
}

int node_depth(const SampleTree& t, Index id) {
  const auto& n = t.nodes[id];
  if (n.leaf()) return 1;
  return 1 + std::max(node_depth(t, n.left), node_depth(t, n.right));
}

}  // namespace

int SampleTree::depth() const { return nodes.empty() ? 0 : node_depth(*this, 0); }

SampleTree construct_tree(const LowRankFactor& factor) {
  const Index n = factor.items();
  if (n == 0) throw std::invalid_argument("construct_tree: no items");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(factor.dual());
  if (es.info() != Eigen::Success) throw NumericalError("dual kernel eigendecomposition failed");
  if (factor.rank() > 0 && es.eigenvalues().minCoeff() < 1e-12)
    throw std::invalid_argument("dual kernel is rank deficient");
  SampleTree t;
  t.lambda = es.eigenvalues();
  t.gamma = t.lambda.cwiseInverse();
  t.G = es.eigenvectors().transpose() * factor.B;
  t.H = t.gamma.asDiagonal() * t.G;
  t.nodes.reserve(static_cast<std::size_t>(2 * n));
  build(t, 0, n);
  return t;
}

double projection_entry(const SampleTree& tree, const std::vector<Index>& E, Index j, Index k) {
  double s = 0.0;
  for (Index i : E) s += tree.gamma[i] * tree.G(i, j) * tree.G(i, k);
  return s;
}

double conditional_mass(const SampleTree& tree, Index node, const ConditionState& state) {
  const auto& nd = tree.nodes.at(static_cast<std::size_t>(node));
  const auto e = static_cast<Index>(state.E.size());
  const auto y = static_cast<Index>(state.Y.size());
  double mass = 0.0;
  for (Index i : state.E) mass += nd.z[i];
  if (y == 0) return mass;
  MatrixXd gey(e, y);
  MatrixXd ae(e, e);
  for (Index a = 0; a < e; ++a) {
    for (Index b = 0; b < y; ++b) gey(a, b) = tree.G(state.E[a], state.Y[b]);
    for (Index b = 0; b < e; ++b) ae(a, b) = nd.A(state.E[a], state.E[b]);
  }
  const MatrixXd m = gey.transpose() * ae * gey;
  return mass - state.Q.cwiseProduct(m).sum();
}

void extend_inverse(const SampleTree& tree, ConditionState& state, Index y) {
  const auto n = static_cast<Index>(state.Y.size());
  VectorXd k(n);
  for (Index a = 0; a < n; ++a) k[a] = projection_entry(tree, state.E, state.Y[a], y);
  const double kappa = projection_entry(tree, state.E, y, y);
  const VectorXd qk = state.Q * k;
  const double s = kappa - k.dot(qk);
  if (!(s > kPivotFloor)) throw NumericalError("K_Y became singular while extending the inverse");
  MatrixXd q(n + 1, n + 1);
  q.topLeftCorner(n, n) = state.Q + qk * qk.transpose() / s;
  q.topRightCorner(n, 1) = -qk / s;
  q.bottomLeftCorner(1, n) = -qk.transpose() / s;
  q(n, n) = 1.0 / s;
  state.Q = std::move(q);
  state.Y.push_back(y);
}

namespace {

Index descend(const SampleTree& tree, const ConditionState& st, Rng& rng, TreeSampleStats& stats) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    Index id = 0;
    bool stuck = false;
    ++stats.nodes_visited;
    while (!tree.nodes[id].leaf()) {
      const auto& nd = tree.nodes[id];
      const double ml = clamped_mass(tree, nd.left, st);
      const double mr = clamped_mass(tree, nd.right, st);
      ++stats.nodes_visited;
      if (!(ml + mr > 0.0)) {
        stuck = true;
        break;
      }
      id = rng.uniform() * (ml + mr) < ml ? nd.left : nd.right;
    }
    if (!stuck) return tree.nodes[id].lo;
    ++stats.restarts;
  }
  throw NumericalError("tree traversal found no probability mass");
}

}  // namespace

DppSample sample_tree(const SampleTree& tree, Rng& rng, TreeSampleStats* stats) {
  TreeSampleStats local;
  TreeSampleStats& st = stats ? *stats : local;
  DppSample out;
  out.seed = rng.seed();
  ConditionState state;
  for (Index i = 0; i < tree.rank(); ++i)
    if (rng.uniform() < tree.lambda[i] / (1.0 + tree.lambda[i])) state.E.push_back(i);
  state.Q.resize(0, 0);
  for (std::size_t t = 0; t < state.E.size(); ++t) {
    const Index y = descend(tree, state, rng, st);
    extend_inverse(tree, state, y);
  }
  out.items = state.Y;
  std::sort(out.items.begin(), out.items.end());
  return out;
}

SubsetDistribution tree_path_distribution(const SampleTree& tree) {
  const Index n = tree.items(), r = tree.rank();
  if (n > 20 || r > 20) throw std::invalid_argument("tree_path_distribution: instance too large");
  std::vector<double> p(std::size_t{1} << n, 0.0);

  // Probability that the traversal ends at each leaf, given the state.
  std::function<void(Index, const ConditionState&, double, std::vector<double>&)> leaves =
      [&](Index id, const ConditionState& st, double w, std::vector<double>& out) {
        const auto& nd = tree.nodes[id];
        if (nd.leaf()) {
          out[static_cast<std::size_t>(nd.lo)] += w;
          return;
        }
        const double ml = clamped_mass(tree, nd.left, st);
        const double mr = clamped_mass(tree, nd.right, st);
        if (!(ml + mr > 0.0)) return;
        if (ml > 0.0) leaves(nd.left, st, w * ml / (ml + mr), out);
        if (mr > 0.0) leaves(nd.right, st, w * mr / (ml + mr), out);
      };

  std::function<void(const ConditionState&, double)> walk = [&](const ConditionState& st,
                                                                double w) {
    if (st.Y.size() == st.E.size()) {
      p[to_mask(st.Y)] += w;
      return;
    }
    std::vector<double> probs(static_cast<std::size_t>(n), 0.0);
    leaves(0, st, 1.0, probs);
    for (Index y = 0; y < n; ++y) {
      if (probs[static_cast<std::size_t>(y)] <= 0.0) continue;
      ConditionState next = st;
      extend_inverse(tree, next, y);
      walk(next, w * probs[static_cast<std::size_t>(y)]);
    }
  };

  for (std::uint64_t emask = 0; emask < (std::uint64_t{1} << r); ++emask) {
    double w = 1.0;
    ConditionState st;
    for (Index i = 0; i < r; ++i) {
      const double q = tree.lambda[i] / (1.0 + tree.lambda[i]);
      if (emask >> i & 1U) {
        w *= q;
        st.E.push_back(i);
      } else {
        w *= 1.0 - q;
      }
    }
    st.Q.resize(0, 0);
    walk(st, w);
  }
  return SubsetDistribution(static_cast<int>(n), std::move(p));
}

namespace {

constexpr char kMagic[8] = {'N', 'E', 'G', 'D', 'T', 'R', 'E', 'E'};
constexpr std::uint32_t kTreeVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::invalid_argument("truncated tree file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void put_array(std::ostream& os, const double* p, Index n) {
  for (Index i = 0; i < n; ++i) put<double>(os, p[i]);
}

void get_array(std::istream& is, double* p, Index n) {
  for (Index i = 0; i < n; ++i) p[i] = get<double>(is);
}

}  // namespace

void save_tree(const SampleTree& tree, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::invalid_argument("cannot open " + tmp + " for writing");
    os.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(os, kTreeVersion);
    put<std::uint32_t>(os, 0);
    const Index n = tree.items(), r = tree.rank();
    put<std::uint64_t>(os, static_cast<std::uint64_t>(n));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(r));
    put<std::uint64_t>(os, tree.nodes.size());
    put_array(os, tree.lambda.data(), r);
    put_array(os, tree.G.data(), r * n);
    for (const auto& nd : tree.nodes) {
      put<std::int64_t>(os, nd.lo);
      put<std::int64_t>(os, nd.hi);
      put<std::int64_t>(os, nd.left);
      put<std::int64_t>(os, nd.right);
      put_array(os, nd.z.data(), r);
      put_array(os, nd.A.data(), r * r);
    }
    if (!os) throw std::runtime_error("failed writing " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename tree cache into place: " + path);
}

SampleTree load_tree(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument("cannot open tree cache " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw std::invalid_argument("not a tree cache file: " + path);
  if (get<std::uint32_t>(is) != kTreeVersion) throw std::invalid_argument("unsupported tree cache version");
  get<std::uint32_t>(is);
  const auto n = static_cast<Index>(get<std::uint64_t>(is));
  const auto r = static_cast<Index>(get<std::uint64_t>(is));
  const auto count = get<std::uint64_t>(is);
  if (n <= 0 || r < 0 || r > n || count != static_cast<std::uint64_t>(2 * n - 1))
    throw std::invalid_argument("inconsistent tree cache header");
  SampleTree t;
  t.lambda.resize(r);
  get_array(is, t.lambda.data(), r);
  t.G.resize(r, n);
  get_array(is, t.G.data(), r * n);
  t.gamma = t.lambda.cwiseInverse();
  t.H = t.gamma.asDiagonal() * t.G;
  t.nodes.resize(count);
  for (auto& nd : t.nodes) {
    nd.lo = get<std::int64_t>(is);
    nd.hi = get<std::int64_t>(is);
    nd.left = get<std::int64_t>(is);
    nd.right = get<std::int64_t>(is);
    nd.z.resize(r);
    get_array(is, nd.z.data(), r);
    nd.A.resize(r, r);
    get_array(is, nd.A.data(), r * r);
  }
  return t;
}

}  // namespace negdep
