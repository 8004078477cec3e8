#include "negdep/pruning.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace negdep {

namespace {

constexpr int kMaxEnumUnits = 16;

void check_enum_size(Index k, const char* who) {
  if (k > kMaxEnumUnits) throw std::invalid_argument(std::string(who) + ": at most 16 units");
}

bool has_identical_columns(const MatrixXd& m) {
  for (Index a = 0; a < m.cols(); ++a)
    for (Index b = a + 1; b < m.cols(); ++b)
      if (m.col(a) == m.col(b)) return true;
  return false;
}

}  // namespace

double erf_activation(double x) { return std::erf(x / std::numbers::sqrt2); }

double TwoLayerNet::eval(const VectorXd& x) const {
  if (x.size() != w.cols()) throw std::invalid_argument("TwoLayerNet::eval: input dimension mismatch");
  if (v.size() != w.rows()) throw std::invalid_argument("TwoLayerNet::eval: v size mismatch");
  const double s = 1.0 / std::sqrt(static_cast<double>(w.cols()));
  const VectorXd h = w * x * s;
  double out = 0.0;
  for (Index i = 0; i < h.size(); ++i) out += v(i) * erf_activation(h(i));
  return out;
}

void MacroParams::check() const {
  const Index k = Q.rows(), m = T.rows();
  if (Q.cols() != k || T.cols() != m || R.rows() != k || R.cols() != m)
    throw std::invalid_argument("MacroParams: inconsistent shapes");
  if (!Q.allFinite() || !R.allFinite() || !T.allFinite())
    throw std::invalid_argument("MacroParams: non-finite entries");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff()) ||
      (m > 0 && (T - T.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + T.cwiseAbs().maxCoeff())))
    throw std::invalid_argument("MacroParams: Q and T must be symmetric");
}

MacroParams macro_from_nets(const TwoLayerNet& student, const TwoLayerNet& teacher) {
  if (student.input_dim() != teacher.input_dim())
    throw std::invalid_argument("macro_from_nets: input dimensions differ");
  const double n = static_cast<double>(student.input_dim());
  MacroParams m;
  m.Q = student.w * student.w.transpose() / n;
  m.R = student.w * teacher.w.transpose() / n;
  m.T = teacher.w * teacher.w.transpose() / n;
  return m;
}

int GroupPartition::groups() const {
  int g = 0;
  for (int x : group_of) g = std::max(g, x + 1);
  return g;
}

std::vector<std::vector<Index>> GroupPartition::members() const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(groups()));
  for (std::size_t i = 0; i < group_of.size(); ++i)
    out[static_cast<std::size_t>(group_of[i])].push_back(static_cast<Index>(i));
  return out;
}

GroupPartition GroupPartition::from_sizes(const std::vector<int>& sizes) {
  if (sizes.empty()) throw std::invalid_argument("GroupPartition: no groups");
  GroupPartition g;
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    if (sizes[m] <= 0) throw std::invalid_argument("GroupPartition: group sizes must be positive");
    for (int j = 0; j < sizes[m]; ++j) g.group_of.push_back(static_cast<int>(m));
  }
  return g;
}

GroupPartition GroupPartition::parse(const std::string& sizes) {
  std::vector<int> out;
  std::stringstream ss(sizes);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("GroupPartition: bad group size '" + tok + "'");
    }
    if (used != tok.size()) throw std::invalid_argument("GroupPartition: bad group size '" + tok + "'");
    out.push_back(v);
  }
  return from_sizes(out);
}

double i2(double q_ab, double q_aa, double q_bb) {
  if (!(q_aa > -1.0) || !(q_bb > -1.0)) throw std::invalid_argument("i2: diagonal entries must exceed -1");
  const double arg = q_ab / (std::sqrt(1.0 + q_aa) * std::sqrt(1.0 + q_bb));
  if (!std::isfinite(arg) || std::abs(arg) > 1.0 + 1e-12)
    throw std::invalid_argument("i2: arcsin argument outside [-1, 1]");
  return std::asin(std::clamp(arg, -1.0, 1.0)) / std::numbers::pi;
}

double generalization_error(const VectorXd& v, const VectorXd& v_star, const MacroParams& macro) {
  macro.check();
  const Index k = macro.students(), m = macro.teachers();
  if (v.size() != k || v_star.size() != m) throw std::invalid_argument("generalization_error: shape mismatch");
  double e = 0.0;
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) e += v(i) * v(j) * i2(macro.Q(i, j), macro.Q(i, i), macro.Q(j, j));
  for (Index a = 0; a < m; ++a)
    for (Index b = 0; b < m; ++b)
      e += v_star(a) * v_star(b) * i2(macro.T(a, b), macro.T(a, a), macro.T(b, b));
  for (Index i = 0; i < k; ++i)
    for (Index a = 0; a < m; ++a)
      e -= 2.0 * v(i) * v_star(a) * i2(macro.R(i, a), macro.Q(i, i), macro.T(a, a));
  return e;
}

McEstimate generalization_error_mc(const TwoLayerNet& student, const TwoLayerNet& teacher,
                                   Index samples, Rng& rng) {
  if (samples < 2) throw std::invalid_argument("generalization_error_mc: need at least 2 samples");
  const Index n = student.input_dim();
  VectorXd x(n);
  double sum = 0.0, sum2 = 0.0;
  for (Index s = 0; s < samples; ++s) {
    for (Index j = 0; j < n; ++j) x(j) = rng.normal();
    const double d = student.eval(x) - teacher.eval(x);
    const double y = 0.5 * d * d;
    sum += y;
    sum2 += y * y;
  }
  const double ns = static_cast<double>(samples);
  McEstimate out;
  out.mean = sum / ns;
  out.stderr_ = std::sqrt(std::max(0.0, (sum2 / ns - out.mean * out.mean) / (ns - 1.0)));
  return out;
}

VectorXd v_drift(const VectorXd& v, const VectorXd& v_star, const MacroParams& macro, double eta) {
  const Index k = macro.students(), m = macro.teachers();
  if (v.size() != k || v_star.size() != m) throw std::invalid_argument("v_drift: shape mismatch");
  VectorXd d(k);
  for (Index i = 0; i < k; ++i) {
    double s = 0.0;
    for (Index a = 0; a < m; ++a) s += v_star(a) * i2(macro.R(i, a), macro.Q(i, i), macro.T(a, a));
    for (Index j = 0; j < k; ++j) s -= v(j) * i2(macro.Q(i, j), macro.Q(i, i), macro.Q(j, j));
    d(i) = eta * s;
  }
  return d;
}

VTrajectory v_dynamics(const VectorXd& v0, const VectorXd& v_star, const MacroParams& macro,
                       const VDynamicsOptions& opt) {
  if (!(opt.eta > 0.0)) throw std::invalid_argument("v_dynamics: eta must be positive");
  macro.check();
  const Index k = macro.students(), m = macro.teachers();
  if (v0.size() != k || v_star.size() != m) throw std::invalid_argument("v_dynamics: shape mismatch");

  // The drift is linear in v, so precompute it as b - A v.
  MatrixXd a(k, k);
  VectorXd b = VectorXd::Zero(k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) a(i, j) = opt.eta * i2(macro.Q(i, j), macro.Q(i, i), macro.Q(j, j));
    for (Index c = 0; c < m; ++c) b(i) += opt.eta * v_star(c) * i2(macro.R(i, c), macro.Q(i, i), macro.T(c, c));
  }
  const double dt = 0.01 / opt.eta;

  VTrajectory out;
  VectorXd v = v0;
  out.path.push_back(v);
  for (Index step = 0;; ++step) {
    const VectorXd drift = b - a * v;
    if (drift.norm() < opt.tol) {
      out.converged = true;
      out.steps = step;
      break;
    }
    if (step >= opt.max_steps) {
      out.steps = step;
      break;
    }
    v += dt * drift;
    if (!v.allFinite() || v.norm() > 1e6) throw NumericalError("v_dynamics: diverged");
    if (opt.record_every > 0 && (step + 1) % opt.record_every == 0) out.path.push_back(v);
  }
  if (out.path.size() == 1 || out.path.back() != v) out.path.push_back(v);
  out.final_v = v;
  return out;
}

MacroParams grouped_macro(const GroupPartition& groups) {
  const Index k = groups.units();
  const Index m = groups.groups();
  MacroParams mp;
  mp.Q = MatrixXd::Zero(k, k);
  mp.R = MatrixXd::Zero(k, m);
  mp.T = MatrixXd::Identity(m, m);
  for (Index i = 0; i < k; ++i) {
    mp.R(i, groups.group_of[static_cast<std::size_t>(i)]) = 1.0;
    for (Index j = 0; j < k; ++j)
      if (groups.group_of[static_cast<std::size_t>(i)] == groups.group_of[static_cast<std::size_t>(j)])
        mp.Q(i, j) = 1.0;
  }
  return mp;
}

GroupedConfig make_grouped_config(const GroupPartition& groups, const VectorXd& v_star, Index N,
                                  Rng& rng) {
  const Index m = groups.groups();
  const Index k = groups.units();
  if (v_star.size() != m) throw std::invalid_argument("make_grouped_config: v_star size must equal group count");
  if (N < m) throw std::invalid_argument("make_grouped_config: need N >= M for orthonormal teachers");

  MatrixXd g(N, m);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < m; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(N, m);

  GroupedConfig c;
  c.groups = groups;
  c.teacher.w = std::sqrt(static_cast<double>(N)) * q.transpose();
  c.teacher.v = v_star;
  c.student.w.resize(k, N);
  c.student.v.resize(k);
  const auto mem = groups.members();
  for (Index a = 0; a < m; ++a) {
    const auto& idx = mem[static_cast<std::size_t>(a)];
    VectorXd z(static_cast<Index>(idx.size()));
    for (Index t = 0; t < z.size(); ++t) z(t) = rng.normal();
    z.array() -= z.mean();
    for (Index t = 0; t < z.size(); ++t) {
      c.student.w.row(idx[static_cast<std::size_t>(t)]) = c.teacher.w.row(a);
      c.student.v(idx[static_cast<std::size_t>(t)]) = v_star(a) / static_cast<double>(z.size()) + z(t);
    }
  }
  c.macro = grouped_macro(groups);
  return c;
}

MatrixXd theory_kernel(const MatrixXd& Q, TheoryKernel kind, double beta) {
  if (kind == TheoryKernel::Gram) return Q;
  if (!(beta > 0.0)) throw std::invalid_argument("theory_kernel: beta must be positive");
  return (-2.0 * beta * (1.0 - Q.array())).exp().matrix();
}

std::vector<Index> divnet_prune(const MatrixXd& features, double beta, double ridge, Index k, Rng& rng) {
  if (k < 0 || k > features.rows()) throw std::invalid_argument("divnet_prune: k outside [0, K]");
  if (k == features.rows()) {
    std::vector<Index> all(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  const KernelMatrix l = rbf_kernel(features, beta, ridge);
  return sample_kdpp(l, k, rng).items;
}

SubsetDistribution kdpp_law(const MatrixXd& L, Index k) {
  const Index n = L.rows();
  check_enum_size(n, "kdpp_law");
  if (L.cols() != n) throw std::invalid_argument("kdpp_law: kernel must be square");
  if (k < 0 || k > n) throw std::invalid_argument("kdpp_law: k outside [0, N]");
  const std::size_t total = std::size_t{1} << n;
  std::vector<double> p(total, 0.0);
  double z = 0.0;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (std::popcount(mask) != k) continue;
    const std::vector<Index> idx = from_mask(mask);
    MatrixXd sub(k, k);
    for (Index a = 0; a < k; ++a)
      for (Index b = 0; b < k; ++b) sub(a, b) = L(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    double det = 0.0;
    if (k == 0)
      det = 1.0;
    else if (!has_identical_columns(sub))
      det = std::max(0.0, sub.partialPivLu().determinant());
    p[mask] = det;
    z += det;
  }
  if (!(z > 0.0)) throw std::invalid_argument("kdpp_law: k exceeds the kernel rank");
  for (double& x : p) x /= z;
  return SubsetDistribution(static_cast<int>(n), std::move(p));
}

VectorXd reweight_groups(const std::vector<Index>& S, const GroupPartition& groups, const VectorXd& v) {
  if (S.empty()) throw std::invalid_argument("reweight_groups: empty selection");
  if (v.size() != groups.units()) throw std::invalid_argument("reweight_groups: v size mismatch");
  const int m = groups.groups();
  VectorXd sum = VectorXd::Zero(m);
  VectorXd count = VectorXd::Zero(m);
  for (Index i = 0; i < v.size(); ++i) sum(groups.group_of[static_cast<std::size_t>(i)]) += v(i);
  for (Index i : S) {
    if (i < 0 || i >= v.size()) throw std::invalid_argument("reweight_groups: index out of range");
    count(groups.group_of[static_cast<std::size_t>(i)]) += 1.0;
  }
  VectorXd kept = VectorXd::Zero(m);
  for (Index i : S) kept(groups.group_of[static_cast<std::size_t>(i)]) += v(i);
  VectorXd out(static_cast<Index>(S.size()));
  for (std::size_t t = 0; t < S.size(); ++t) {
    const int g = groups.group_of[static_cast<std::size_t>(S[t])];
    out(static_cast<Index>(t)) = v(S[t]) + (sum(g) - kept(g)) / count(g);
  }
  return out;
}

LeastSquaresReweight reweight_least_squares(const std::vector<Index>& S, const MatrixXd& activations,
                                            const VectorXd& v) {
  if (S.empty()) throw std::invalid_argument("reweight_least_squares: empty selection");
  if (v.size() != activations.cols()) throw std::invalid_argument("reweight_least_squares: v size mismatch");
  MatrixXd as(activations.rows(), static_cast<Index>(S.size()));
  for (std::size_t t = 0; t < S.size(); ++t) {
    if (S[t] < 0 || S[t] >= activations.cols())
      throw std::invalid_argument("reweight_least_squares: index out of range");
    as.col(static_cast<Index>(t)) = activations.col(S[t]);
  }
  const VectorXd target = activations * v;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(as);
  LeastSquaresReweight out;
  out.v_tilde = cod.solve(target);
  out.rank = cod.rank();
  out.rank_deficient = out.rank < as.cols();
  return out;
}

double pruned_error(const std::vector<Index>& S, const VectorXd& v_tilde, const VectorXd& v_star,
                    const MacroParams& macro) {
  if (static_cast<Index>(S.size()) != v_tilde.size()) throw std::invalid_argument("pruned_error: S and v~ differ in size");
  const Index k = static_cast<Index>(S.size());
  MacroParams sub;
  sub.Q.resize(k, k);
  sub.R.resize(k, macro.teachers());
  sub.T = macro.T;
  for (Index a = 0; a < k; ++a) {
    if (S[static_cast<std::size_t>(a)] < 0 || S[static_cast<std::size_t>(a)] >= macro.students())
      throw std::invalid_argument("pruned_error: index out of range");
    sub.R.row(a) = macro.R.row(S[static_cast<std::size_t>(a)]);
    for (Index b = 0; b < k; ++b) sub.Q(a, b) = macro.Q(S[static_cast<std::size_t>(a)], S[static_cast<std::size_t>(b)]);
  }
  return generalization_error(v_tilde, v_star, sub);
}

double pruned_error_grouped(std::uint64_t mask, const GroupPartition& groups, const VectorXd& v_star) {
  const int m = groups.groups();
  if (v_star.size() != m) throw std::invalid_argument("pruned_error_grouped: v_star size mismatch");
  std::vector<bool> explained(static_cast<std::size_t>(m), false);
  for (Index i = 0; i < groups.units(); ++i)
    if (mask >> i & 1U) explained[static_cast<std::size_t>(groups.group_of[static_cast<std::size_t>(i)])] = true;
  double e = 0.0;
  for (int g = 0; g < m; ++g)
    if (!explained[static_cast<std::size_t>(g)]) e += v_star(g) * v_star(g);
  return e / 6.0;
}

VectorXd unexplained_probabilities(const SubsetDistribution& law, const GroupPartition& groups) {
  if (law.items() != groups.units()) throw std::invalid_argument("unexplained_probabilities: size mismatch");
  const int m = groups.groups();
  std::vector<std::uint64_t> gmask(static_cast<std::size_t>(m), 0);
  for (Index i = 0; i < groups.units(); ++i)
    gmask[static_cast<std::size_t>(groups.group_of[static_cast<std::size_t>(i)])] |= std::uint64_t{1} << i;
  VectorXd out = VectorXd::Zero(m);
  const auto& p = law.probabilities();
  for (std::uint64_t mask = 0; mask < p.size(); ++mask) {
    if (p[mask] == 0.0) continue;
    for (int g = 0; g < m; ++g)
      if ((mask & gmask[static_cast<std::size_t>(g)]) == 0) out(g) += p[mask];
  }
  return out;
}

double expected_pruned_error(const SubsetDistribution& law, const GroupPartition& groups,
                             const VectorXd& v_star) {
  if (v_star.size() != groups.groups()) throw std::invalid_argument("expected_pruned_error: v_star size mismatch");
  const VectorXd u = unexplained_probabilities(law, groups);
  return u.dot(v_star.cwiseProduct(v_star)) / 6.0;
}

SubsetDistribution bernoulli_law(const VectorXd& p) {
  const Index n = p.size();
  check_enum_size(n, "bernoulli_law");
  for (Index i = 0; i < n; ++i)
    if (!(p(i) >= -1e-12 && p(i) <= 1.0 + 1e-12))
      throw std::invalid_argument("bernoulli_law: probabilities must lie in [0, 1]");
  const std::size_t total = std::size_t{1} << n;
  std::vector<double> out(total);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double q = 1.0;
    for (Index i = 0; i < n; ++i) {
      const double pi = std::clamp(p(i), 0.0, 1.0);
      q *= (mask >> i & 1U) ? pi : 1.0 - pi;
    }
    out[mask] = q;
  }
  return SubsetDistribution(static_cast<int>(n), std::move(out));
}

SubsetDistribution conditional_poisson_law(const VectorXd& p, Index k) {
  const Index n = p.size();
  check_enum_size(n, "conditional_poisson_law");
  if (std::abs(p.sum() - static_cast<double>(k)) > 1e-9)
    throw std::invalid_argument("conditional_poisson_law: marginals must sum to k");
  constexpr double kEdge = 1e-14;
  std::uint64_t forced = 0, free_mask = 0;
  for (Index i = 0; i < n; ++i) {
    if (!(p(i) >= -kEdge && p(i) <= 1.0 + kEdge))
      throw std::invalid_argument("conditional_poisson_law: probabilities must lie in [0, 1]");
    if (p(i) >= 1.0 - kEdge)
      forced |= std::uint64_t{1} << i;
    else if (p(i) > kEdge)
      free_mask |= std::uint64_t{1} << i;
  }
  const std::size_t total = std::size_t{1} << n;
  std::vector<std::uint64_t> support;
  for (std::uint64_t mask = 0; mask < total; ++mask)
    if (std::popcount(mask) == k && (mask & forced) == forced && (mask & ~(forced | free_mask)) == 0)
      support.push_back(mask);
  if (support.empty()) throw std::invalid_argument("conditional_poisson_law: no subset of size k fits");

  // Fixed-point iteration on log odds: theta_i += log p_i - log pi_i(theta).
  VectorXd theta = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i)
    if (free_mask >> i & 1U) theta(i) = std::log(p(i) / (1.0 - p(i)));
  std::vector<double> w(support.size());
  auto compute = [&](VectorXd& marg) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < support.size(); ++s) {
      double t = 0.0;
      for (Index i = 0; i < n; ++i)
        if ((support[s] >> i & 1U) && (free_mask >> i & 1U)) t += theta(i);
      w[s] = t;
      mx = std::max(mx, t);
    }
    double z = 0.0;
    for (double& x : w) z += (x = std::exp(x - mx));
    marg = VectorXd::Zero(n);
    for (std::size_t s = 0; s < support.size(); ++s) {
      w[s] /= z;
      for (Index i = 0; i < n; ++i)
        if (support[s] >> i & 1U) marg(i) += w[s];
    }
  };
  VectorXd marg;
  double err = 0.0;
  for (int it = 0; it < 20000; ++it) {
    compute(marg);
    err = 0.0;
    for (Index i = 0; i < n; ++i)
      if (free_mask >> i & 1U) err = std::max(err, std::abs(marg(i) - p(i)));
    if (err < 1e-13) break;
    for (Index i = 0; i < n; ++i)
      if (free_mask >> i & 1U) theta(i) += std::log(p(i)) - std::log(marg(i));
  }
  if (err > 1e-9) throw NumericalError("conditional_poisson_law: marginal fit did not converge");
  std::vector<double> out(total, 0.0);
  for (std::size_t s = 0; s < support.size(); ++s) out[support[s]] = w[s];
  return SubsetDistribution(static_cast<int>(n), std::move(out));
}

double check_matched_marginals(const SubsetDistribution& a, const SubsetDistribution& b, double tol) {
  if (a.items() != b.items()) throw std::invalid_argument("check_matched_marginals: size mismatch");
  const double d = (a.marginals() - b.marginals()).cwiseAbs().maxCoeff();
  if (d > tol) throw std::invalid_argument("marginals mismatch: " + std::to_string(d));
  return d;
}

PruneComparison compare_pruning(const GroupPartition& groups, const VectorXd& v_star, Index k,
                                TheoryKernel kind, double beta) {
  if (k < 1 || k > groups.groups())
    throw std::invalid_argument("compare_pruning: k must lie in [1, M] (kernel rank)");
  const MacroParams macro = grouped_macro(groups);
  const SubsetDistribution dpp = kdpp_law(theory_kernel(macro.Q, kind, beta), k);
  PruneComparison out;
  out.marginals = dpp.marginals();
  const SubsetDistribution bern = bernoulli_law(out.marginals);
  const SubsetDistribution cp = conditional_poisson_law(out.marginals, k);
  check_matched_marginals(dpp, bern);
  check_matched_marginals(dpp, cp);
  out.e_dpp = expected_pruned_error(dpp, groups, v_star);
  out.e_bernoulli = expected_pruned_error(bern, groups, v_star);
  out.e_conditional_poisson = expected_pruned_error(cp, groups, v_star);
  return out;
}

}  // namespace negdep
