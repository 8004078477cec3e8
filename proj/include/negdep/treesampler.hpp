#ifndef NEGDEP_TREESAMPLER_HPP
#define NEGDEP_TREESAMPLER_HPP

#include <string>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/kernel.hpp"
#include "negdep/random.hpp"
#include "negdep/sampler.hpp"

namespace negdep {

/// Binary tree over contiguous item ranges for repeated sampling of a
/// low-rank L-ensemble L = B^T B.
struct SampleTree {
  struct Node {
    Index lo = 0, hi = 0;        // items [lo, hi)
    Index left = -1, right = -1;  // children, -1 at leaves
    VectorXd z;                   // z_i = gamma_i * sum_j G_ij^2
    MatrixXd A;                   // sum_j h_j h_j^T
    bool leaf() const { return left < 0; }
  };

  VectorXd lambda;  // eigenvalues of the dual kernel
  VectorXd gamma;   // 1 / lambda
  MatrixXd G;       // r x N, G_ij = w_i^T b_j
  MatrixXd H;       // gamma o G
  std::vector<Node> nodes;  // nodes[0] is the root

  Index items() const { return G.cols(); }
  Index rank() const { return G.rows(); }
  int depth() const;
};

struct ConditionState {
  std::vector<Index> E;  // selected eigen-indices
  std::vector<Index> Y;  // selected items
  MatrixXd Q;            // inverse of K_Y
};

SampleTree construct_tree(const LowRankFactor& factor);

/// Entry K_jk of the projection kernel restricted to eigen-indices E.
double projection_entry(const SampleTree& tree, const std::vector<Index>& E, Index j, Index k);

/// Sum over the node's items of the conditional diagonal K^Y_jj.
double conditional_mass(const SampleTree& tree, Index node, const ConditionState& state);

/// Append item y to the state, updating Q = (K_Y)^{-1} by a Schur block step.
void extend_inverse(const SampleTree& tree, ConditionState& state, Index y);

struct TreeSampleStats {
  long nodes_visited = 0;
  int restarts = 0;
};

DppSample sample_tree(const SampleTree& tree, Rng& rng, TreeSampleStats* stats = nullptr);

/// Exact law of sample_tree computed by enumerating every selection path with
/// the sampler's own branch probabilities. Intended for small N and r.
SubsetDistribution tree_path_distribution(const SampleTree& tree);

void save_tree(const SampleTree& tree, const std::string& path);
SampleTree load_tree(const std::string& path);

}  // namespace negdep

#endif
