#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "negdep/coreset.hpp"
#include "negdep/css.hpp"
#include "negdep/gaf.hpp"
#include "negdep/io.hpp"
#include "negdep/kernel.hpp"
#include "negdep/pruning.hpp"
#include "negdep/quadrature.hpp"
#include "negdep/quantum.hpp"
#include "negdep/sampler.hpp"
#include "negdep/spatial.hpp"
#include "negdep/stats.hpp"
#include "negdep/verify.hpp"

#ifndef NEGDEP_DEFAULT_FIXTURES
#define NEGDEP_DEFAULT_FIXTURES ""
#endif

namespace negdep::cli {

namespace {

using io::format_double;
using json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream ids of the root generator, one per subcommand.
enum Stream : std::uint64_t {
  kSample = 1,
  kQuadrature,
  kCoreset,
  kCss,
  kGdp,
  kNetwork,
  kGaf,
  kPrune,
  kQuantum,
};

struct Common {
  std::uint64_t seed = 0;
  std::string out = "-";
  std::string manifest;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> args;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Root seed (u64)");
  sub->add_option("--out", c.out, "Output path, '-' for stdout")->capture_default_str();
  sub->add_option("--manifest", c.manifest, "Also write a run manifest JSON here");
}

void emit(const Context& ctx, const std::string& path, const std::string& content) {
  if (path == "-") {
    ctx.out << content;
    ctx.out.flush();
  } else {
    io::atomic_write(path, content);
  }
}

void write_run_manifest(const Context& ctx, const Common& c, const std::string& command) {
  if (c.manifest.empty()) return;
  json j;
  j["schema"] = "negdep-manifest/1";
  j["version"] = version();
  j["config"] = {{"command", command}, {"seed", c.seed}, {"out", c.out}, {"args", ctx.args}};
  j["checks"] = json::array();
  j["summary"] = {{"passed", 0}, {"failed", 0}, {"skipped", 0}};
  emit(ctx, c.manifest, j.dump(2) + "\n");
}

std::string join_items(const std::vector<Index>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ";" : "") + std::to_string(items[i]);
  return s;
}

std::string csv_row(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s + "\n";
}

json json_value(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

Rng stream(std::uint64_t seed, Stream s) { return Rng(seed).split(s); }

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  Common c;
  std::string kernel;
  std::string mode = "dpp";
  Index k = -1;
  int reps = 1;
};

void setup_sample(CLI::App& app, SampleArgs& a) {
  auto* s = app.add_subcommand("sample", "Exact DPP samples from a kernel file");
  s->add_option("--kernel", a.kernel, "Kernel file (.csv or .json)")->required();
  s->add_option("--mode", a.mode, "dpp, kdpp or projection")
      ->check(CLI::IsMember({"dpp", "kdpp", "projection"}))
      ->capture_default_str();
  s->add_option("--k", a.k, "Sample size for kdpp");
  s->add_option("--reps", a.reps, "Number of samples")->capture_default_str();
  add_common(s, a.c);
}

int run_sample(const Context& ctx, const SampleArgs& a) {
  if (a.reps < 1) throw std::invalid_argument("--reps must be positive");
  if (a.mode == "kdpp" && a.k < 0) throw std::invalid_argument("--mode kdpp needs --k");
  const KernelMatrix kern = io::load_kernel(a.kernel);
  const Rng root = stream(a.c.seed, kSample);
  std::string text = io::output_header(a.c.seed);
  for (int r = 0; r < a.reps; ++r) {
    Rng rng = root.split(static_cast<std::uint64_t>(r));
    DppSample s;
    if (a.mode == "dpp")
      s = sample_spectral(kern, rng);
    else if (a.mode == "kdpp")
      s = sample_kdpp(kern, a.k, rng);
    else
      s = sample_projection(kern, rng);
    text += join_items(s.items) + "\n";
  }
  emit(ctx, a.c.out, text);
  write_run_manifest(ctx, a.c, "sample");
  return kOk;
}

// ---------------------------------------------------------------------------
// quadrature

struct QuadArgs {
  Common c;
  int d = 1;
  std::vector<int> n{8, 16, 32, 64};
  std::string method = "dpp";
  std::string f = "bump";
  int reps = 100;
  int grid = 0;
};

void setup_quadrature(CLI::App& app, QuadArgs& a) {
  auto* s = app.add_subcommand("quadrature", "Monte Carlo variance of quadrature rules on [-1, 1]^d");
  s->add_option("--d", a.d, "Dimension")->capture_default_str();
  s->add_option("--n", a.n, "Node counts, comma separated")->delimiter(',')->capture_default_str();
  s->add_option("--method", a.method, "gauss, iid or dpp")
      ->check(CLI::IsMember({"gauss", "iid", "dpp"}))
      ->capture_default_str();
  s->add_option("--f", a.f, "Integrand: bump, square, cosine or linear")->capture_default_str();
  s->add_option("--reps", a.reps, "Replicates per N")->capture_default_str();
  s->add_option("--grid", a.grid, "Grid resolution of the DPP sampler, 0 for the default");
  add_common(s, a.c);
}

int run_quadrature(const Context& ctx, const QuadArgs& a) {
  if (a.reps < 1) throw std::invalid_argument("--reps must be positive");
  Rng rng = stream(a.c.seed, kQuadrature).split(0);
  const auto rows = variance_sweep(quad_method_from_string(a.method), Measure::uniform(a.d),
                                   named_test_function(a.f), a.n, a.reps, rng, SweepOptions{a.grid});
  std::string text = io::output_header(a.c.seed) + "N,mean,var\n";
  for (const auto& r : rows) text += std::to_string(r.n) + "," + csv_row({r.mean, r.variance});
  emit(ctx, a.c.out, text);
  write_run_manifest(ctx, a.c, "quadrature");
  return kOk;
}

// ---------------------------------------------------------------------------
// coreset

struct CoresetArgs {
  Common c;
  std::string family = "kmeans";
  std::string method = "both";
  Index m = 10;
  Index n = 200;
  int clusters = 3;
  int bandwidth = 3;
  std::string data;
  int reps = 200;
  int eps_count = 20;
  int probes = 200;
};

void setup_coreset(CLI::App& app, CoresetArgs& a) {
  auto* s = app.add_subcommand("coreset", "Uniform coreset failure probabilities, i.i.d. vs DPP");
  s->add_option("--family", a.family, "kmeans, regression or bandlimited")
      ->check(CLI::IsMember({"kmeans", "regression", "bandlimited"}))
      ->capture_default_str();
  s->add_option("--method", a.method, "iid, dpp or both")
      ->check(CLI::IsMember({"iid", "dpp", "both"}))
      ->capture_default_str();
  s->add_option("--m", a.m, "Coreset size")->capture_default_str();
  s->add_option("--n", a.n, "Synthetic data size")->capture_default_str();
  s->add_option("--data", a.data, "Data CSV (regression: last column is the target)");
  s->add_option("--clusters", a.clusters, "k-means centres per query")->capture_default_str();
  s->add_option("--bandwidth", a.bandwidth, "Band limit")->capture_default_str();
  s->add_option("--reps", a.reps, "Coreset draws")->capture_default_str();
  s->add_option("--eps-count", a.eps_count, "Points on the log epsilon grid")->capture_default_str();
  s->add_option("--probes", a.probes, "Random queries per draw")->capture_default_str();
  add_common(s, a.c);
}

LossFamily coreset_family(const CoresetArgs& a, Rng& rng) {
  const FamilyKind kind = family_kind_from_string(a.family);
  if (kind == FamilyKind::BandLimited) return LossFamily::band_limited(a.n, a.bandwidth, 0.9);
  MatrixXd x;
  if (!a.data.empty()) {
    x = io::matrix_from_csv(io::read_file(a.data));
  } else {
    if (a.n < 2) throw std::invalid_argument("--n must be at least 2");
    x.resize(a.n, kind == FamilyKind::KMeans ? 2 : 3);
    for (Index i = 0; i < a.n; ++i) {
      const double shift = static_cast<double>(i % 3) * 3.0;
      for (Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal() + (kind == FamilyKind::KMeans ? shift : 0.0);
      if (kind == FamilyKind::LinearRegression) x(i, 2) = 0.5 * x(i, 0) - 0.3 * x(i, 1) + 0.1 + 0.1 * rng.normal();
    }
  }
  if (kind == FamilyKind::KMeans) return LossFamily::kmeans(x, a.clusters);
  if (x.cols() < 2) throw std::invalid_argument("regression data needs at least two columns");
  return LossFamily::linear_regression(x.leftCols(x.cols() - 1), x.col(x.cols() - 1));
}

int run_coreset(const Context& ctx, const CoresetArgs& a) {
  const Rng root = stream(a.c.seed, kCoreset);
  Rng data_rng = root.split(0), rng = root.split(1);
  const LossFamily fam = coreset_family(a, data_rng);
  UniformErrorOptions opt;
  opt.probes = a.probes;
  opt.run_iid = a.method != "dpp";
  opt.run_dpp = a.method != "iid";
  const auto table = uniform_error_experiment(fam, a.m, log_epsilon_grid(a.eps_count), a.reps, rng, opt);
  std::string text = io::output_header(a.c.seed) + "epsilon,fail_prob_iid,fail_prob_dpp\n";
  for (const auto& r : table.rows)
    text += csv_row({r.eps, opt.run_iid ? r.fail_iid : kNaN, opt.run_dpp ? r.fail_dpp : kNaN});
  emit(ctx, a.c.out, text);
  write_run_manifest(ctx, a.c, "coreset");
  return kOk;
}

// ---------------------------------------------------------------------------
// css

struct CssArgs {
  Common c;
  std::string matrix;
  Index k = 2;
  Index s = -1;
  std::string method = "dpp";
  int reps = 1;
};

void setup_css(CLI::App& app, CssArgs& a) {
  auto* s = app.add_subcommand("css", "Column subset selection");
  s->add_option("--matrix", a.matrix, "N x d matrix CSV")->required();
  s->add_option("--k", a.k, "Target rank")->capture_default_str();
  s->add_option("--s", a.s, "Draws for the i.i.d. methods, default k");
  s->add_option("--method", a.method, "length_squared, leverage, volume or dpp")
      ->check(CLI::IsMember({"length_squared", "leverage", "volume", "dpp"}))
      ->capture_default_str();
  s->add_option("--reps", a.reps, "Independent selections; the best one is reported")->capture_default_str();
  add_common(s, a.c);
}

int run_css(const Context& ctx, const CssArgs& a) {
  if (a.reps < 1) throw std::invalid_argument("--reps must be positive");
  const FeatureMatrix fm(io::matrix_from_csv(io::read_file(a.matrix)));
  const CssMethod method = css_method_from_string(a.method);
  const Rng root = stream(a.c.seed, kCss);
  CssResult best;
  double total = 0.0;
  for (int r = 0; r < a.reps; ++r) {
    Rng rng = root.split(static_cast<std::uint64_t>(r));
    const CssResult res = css_select(method, fm, a.k, a.s < 0 ? a.k : a.s, rng);
    total += res.error;
    if (r == 0 || res.error < best.error) best = res;
  }
  const double opt = fm.optimal_error(a.k);
  json j;
  j["negdep"] = version();
  j["seed"] = a.c.seed;
  j["method"] = to_string(method);
  j["k"] = a.k;
  j["S"] = best.columns;
  j["error"] = best.error;
  j["optimal_error"] = opt;
  j["ratio"] = json_value(opt > 0.0 ? best.error / opt : kNaN);
  j["reps"] = a.reps;
  j["mean_error"] = total / a.reps;
  emit(ctx, a.c.out, j.dump(2) + "\n");
  write_run_manifest(ctx, a.c, "css");
  return kOk;
}

// ---------------------------------------------------------------------------
// gdp

struct GdpArgs {
  Common c;
  std::string task = "test";
  std::string points;
  int d = 2;
  double lambda = 0.0;
  double angle = 0.0;
  double radius = 12.0;
  int cells = 0;
  double c_const = 1.0;
  double delta = 0.9;
  int reps = 1;
};

void setup_gdp(CLI::App& app, GdpArgs& a) {
  auto* s = app.add_subcommand("gdp", "Spiked Gaussian DPP: sample, estimate Sigma, spike test");
  s->add_option("--task", a.task, "sample, estimate or test")
      ->check(CLI::IsMember({"sample", "estimate", "test"}))
      ->capture_default_str();
  s->add_option("--points", a.points, "Point CSV inside B(0, radius); default simulates");
  s->add_option("--d", a.d, "Dimension of simulated patterns")->capture_default_str();
  s->add_option("--lambda", a.lambda, "Spike strength of simulated patterns")->capture_default_str();
  s->add_option("--angle", a.angle, "Spike direction in the first coordinate plane (radians)");
  s->add_option("--radius", a.radius, "Ball window radius")->capture_default_str();
  s->add_option("--cells", a.cells, "Grid cells per axis, 0 for the continuous sampler");
  s->add_option("--c", a.c_const, "Constant c of the interaction radius")->capture_default_str();
  s->add_option("--delta", a.delta, "Test level parameter")->capture_default_str();
  s->add_option("--reps", a.reps, "Simulated patterns")->capture_default_str();
  add_common(s, a.c);
}

int run_gdp(const Context& ctx, const GdpArgs& a) {
  if (a.reps < 1) throw std::invalid_argument("--reps must be positive");
  if (!a.points.empty() && a.reps != 1) throw std::invalid_argument("--points takes a single pattern");
  const int d = a.points.empty() ? a.d : 0;
  VectorXd u;
  if (a.points.empty()) {
    if (d < 2) throw std::invalid_argument("--d must be at least 2");
    u = VectorXd::Zero(d);
    u(0) = std::cos(a.angle);
    u(1) = std::sin(a.angle);
  }
  const Rng root = stream(a.c.seed, kGdp);
  auto pattern = [&](int r) {
    if (!a.points.empty()) {
      PointPattern p;
      p.points = io::matrix_from_csv(io::read_file(a.points));
      p.window = Window::ball(VectorXd::Zero(p.points.cols()), a.radius);
      return restrict_to(p, p.window);
    }
    Rng rng = root.split(static_cast<std::uint64_t>(r));
    return sample_spiked_gdp(a.lambda, u, a.radius, a.cells, rng);
  };

  std::string text = io::output_header(a.c.seed);
  if (a.task == "sample") {
    const PointPattern p = pattern(0);
    for (int j = 0; j < p.dim(); ++j) text += (j ? ",x" : "x") + std::to_string(j);
    text += "\n";
    for (Index i = 0; i < p.size(); ++i) {
      const VectorXd row = p.points.row(i);
      text += csv_row(std::vector<double>(row.data(), row.data() + row.size()));
    }
  } else {
    for (int r = 0; r < a.reps; ++r) {
      const PointPattern p = pattern(r);
      const int dim = p.dim();
      if (r == 0) {
        text += "replicate,n";
        if (a.task == "estimate") {
          for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) text += ",sigma_" + std::to_string(i) + std::to_string(j);
        } else {
          text += ",statistic,threshold,rate,reject,cos";
          for (int i = 0; i < dim; ++i) text += ",u_" + std::to_string(i);
        }
        text += "\n";
      }
      const MatrixXd sigma = calibrated_sigma_hat(p, interaction_radius(p.size(), dim, a.c_const));
      text += std::to_string(r) + "," + std::to_string(p.size()) + ",";
      std::vector<double> vals;
      if (a.task == "estimate") {
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) vals.push_back(sigma(i, j));
      } else {
        const SpikeTestReport rep = spike_test(sigma, p.size(), dim, a.delta, a.c_const);
        vals = {rep.statistic, rep.threshold, rep.rate, rep.reject ? 1.0 : 0.0,
                u.size() == dim ? std::abs(rep.direction.dot(u)) : kNaN};
        for (int i = 0; i < dim; ++i) vals.push_back(rep.direction(i));
      }
      text += csv_row(vals);
    }
  }
  emit(ctx, a.c.out, text);
  write_run_manifest(ctx, a.c, "gdp");
  return kOk;
}

// ---------------------------------------------------------------------------
// network

struct NetworkArgs {
  Common c;
  std::string task = "coverage";
  std::string process = "lattice";
  std::string lattice = "Z2";
  double sigma = 0.1;
  double intensity = 1.0;
  double side = 0.0;
  std::vector<double> theta{0.0, 0.1, 0.3, 1.0, 3.0, 10.0};
  double beta = 2.0;
  std::vector<double> radii{1.5, 2.0, 3.0, 4.0, 5.0, 6.0};
  int reps = 400;
};

void setup_network(CLI::App& app, NetworkArgs& a) {
  auto* s = app.add_subcommand("network", "Perturbed-lattice networks: SINR coverage or number variance");
  s->add_option("--task", a.task, "coverage or variance")
      ->check(CLI::IsMember({"coverage", "variance"}))
      ->capture_default_str();
  s->add_option("--process", a.process, "lattice or poisson")
      ->check(CLI::IsMember({"lattice", "poisson"}))
      ->capture_default_str();
  s->add_option("--lattice", a.lattice, "Z1, Z2, triangular, Z3 or FCC")->capture_default_str();
  s->add_option("--sigma", a.sigma, "Perturbation standard deviation")->capture_default_str();
  s->add_option("--intensity", a.intensity, "Poisson intensity")->capture_default_str();
  s->add_option("--box", a.side, "Window side length (default 24 for coverage, 50 for variance)");
  s->add_option("--theta", a.theta, "SINR thresholds, comma separated")->delimiter(',');
  s->add_option("--beta", a.beta, "Path-loss exponent parameter")->capture_default_str();
  s->add_option("--radii", a.radii, "Ball radii, comma separated")->delimiter(',');
  s->add_option("--reps", a.reps, "Replicates")->capture_default_str();
  add_common(s, a.c);
}

int run_network(const Context& ctx, const NetworkArgs& a) {
  const LatticeKind kind = lattice_from_string(a.lattice);
  const int d = static_cast<int>(lattice_basis(kind).cols());
  const bool coverage = a.task == "coverage";
  const double side = a.side > 0.0 ? a.side : (coverage ? 24.0 : 50.0);
  const Window w = coverage ? Window::box(VectorXd::Constant(d, -side / 2), VectorXd::Constant(d, side / 2))
                            : Window::cube(d, side);
  const std::function<PointPattern(Rng&)> sampler = [&](Rng& r) {
    return a.process == "poisson" ? sample_poisson(w, a.intensity, r) : sample_perturbed_lattice(kind, a.sigma, w, r, true);
  };
  Rng rng = stream(a.c.seed, kNetwork).split(0);
  std::string text = io::output_header(a.c.seed);
  if (coverage) {
    const auto p = coverage_probability(sampler, a.theta, a.beta, a.reps, rng);
    text += "theta,p_c\n";
    for (std::size_t i = 0; i < p.size(); ++i) text += csv_row({a.theta[i], p[i]});
  } else {
    text += "radius,mean,variance\n";
    for (const auto& r : number_variance(sampler, a.radii, a.reps, rng)) text += csv_row({r.radius, r.mean, r.variance});
  }
  emit(ctx, a.c.out, text);
  write_run_manifest(ctx, a.c, "network");
  return kOk;
}

// ---------------------------------------------------------------------------
// gaf

struct GafArgs {
  Common c;
  std::string model = "planar";
  double L = 1.0;
  std::string task = "zeros";
  int k = 0;
  double lambda = 0.0;
  double box = 3.0;
  int res = 200;
  double tau = 1.0;
  double K = 1.0 / 14.0;
  std::string mask = "level";
};

void setup_gaf(CLI::App& app, GafArgs& a) {
  auto* s = app.add_subcommand("gaf", "GAF zeros, spectrograms and signal detection");
  s->add_option("--model", a.model, "planar, spherical or hyperbolic")->capture_default_str();
  s->add_option("--L", a.L, "GAF parameter; for detect, the box half-size")->capture_default_str();
  s->add_option("--task", a.task, "zeros, detect or spectrogram")
      ->check(CLI::IsMember({"zeros", "detect", "spectrogram"}))
      ->capture_default_str();
  s->add_option("--k", a.k, "Hermite index of the signal")->capture_default_str();
  s->add_option("--lambda", a.lambda, "Signal amplitude (0 for pure noise)")->capture_default_str();
  s->add_option("--box", a.box, "Zero disk radius or spectrogram half-size")->capture_default_str();
  s->add_option("--res", a.res, "Grid resolution per axis")->capture_default_str();
  s->add_option("--tau", a.tau, "Detection tail parameter")->capture_default_str();
  s->add_option("--K", a.K, "Detection constant K");
  s->add_option("--mask", a.mask, "Detect output: level or signal")
      ->check(CLI::IsMember({"level", "signal"}))
      ->capture_default_str();
  add_common(s, a.c);
}

template <class M>
std::string grid_csv(const M& m) {
  std::string s;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) s += ",";
      if constexpr (std::is_same_v<typename M::Scalar, bool>)
        s += m(r, c) ? "1" : "0";
      else
        s += format_double(m(r, c));
    }
    s += "\n";
  }
  return s;
}

int run_gaf(const Context& ctx, const GafArgs& a) {
  const Rng root = stream(a.c.seed, kGaf);
  Rng rng = root.split(0);
  std::string text = io::output_header(a.c.seed);
  if (a.task == "zeros") {
    const GafSeries f = sample_gaf(gaf_model_from_string(a.model), a.L, a.box, rng);
    text += "re,im\n";
    for (cplx z : find_zeros(f, a.box)) text += csv_row({z.real(), z.imag()});
  } else if (a.task == "spectrogram") {
    const Index terms = whitenoise_terms(std::sqrt(2.0) * a.box);
    const WhiteNoiseStft f = a.lambda > 0.0 ? noisy_hermite(a.k, a.lambda, terms, rng) : stft_whitenoise(terms, rng);
    const SpectrogramGrid g = spectrogram(f, a.box, a.res);
    text += "# rows: imaginary part ascending, columns: real part ascending, half_size=" + format_double(a.box) + "\n";
    text += grid_csv(g.values);
  } else {
    const WhiteNoiseStft obs = noisy_hermite(a.k, a.lambda, whitenoise_terms(std::sqrt(2.0) * a.L), rng);
    DetectionOptions opt;
    opt.K = a.K;
    opt.tau = a.tau;
    opt.resolution = a.res;
    const DetectionResult d = detect_signal(obs, a.k, a.L, opt, a.lambda);
    if (a.mask == "signal" && d.signal_region.size() == 0) throw std::invalid_argument("--mask signal needs --lambda > 0");
    text += "# reject_noise=" + std::string(d.reject_noise ? "1" : "0") + " threshold=" + format_double(d.threshold) +
            " lambda_bound=" + format_double(d.lambda_bound) + " alpha=" + format_double(d.alpha) + "\n";
    text += grid_csv(a.mask == "signal" ? d.signal_region : d.level_set);
  }
  emit(ctx, a.c.out, text);
  write_run_manifest(ctx, a.c, "gaf");
  return kOk;
}

// ---------------------------------------------------------------------------
// prune

struct PruneArgs {
  Common c;
  Index K = 0;
  Index M = 0;
  std::string groups;
  Index kn = 0;
  std::string kernel = "gram";
  double beta = 1.0;
  std::vector<double> v_star;
  int trials = 0;
};

void setup_prune(CLI::App& app, PruneArgs& a) {
  auto* s = app.add_subcommand("prune", "Expected pruned error: DPP vs matched independent selection");
  s->add_option("--K", a.K, "Hidden units");
  s->add_option("--M", a.M, "Teacher units (groups)");
  s->add_option("--groups", a.groups, "Group sizes, e.g. 2,1,3");
  s->add_option("--kn", a.kn, "Units kept")->required();
  s->add_option("--kernel", a.kernel, "gram or gaussian")
      ->check(CLI::IsMember({"gram", "gaussian"}))
      ->capture_default_str();
  s->add_option("--beta", a.beta, "Gaussian kernel bandwidth")->capture_default_str();
  s->add_option("--vstar", a.v_star, "Teacher output weights, comma separated")->delimiter(',');
  s->add_option("--trials", a.trials, "Monte Carlo draws from the DPP law")->capture_default_str();
  add_common(s, a.c);
}

GroupPartition prune_groups(const PruneArgs& a) {
  if (!a.groups.empty()) {
    GroupPartition g = GroupPartition::parse(a.groups);
    if (a.K > 0 && g.units() != a.K) throw std::invalid_argument("--K disagrees with --groups");
    if (a.M > 0 && g.groups() != a.M) throw std::invalid_argument("--M disagrees with --groups");
    return g;
  }
  if (a.K < 1 || a.M < 1 || a.M > a.K) throw std::invalid_argument("give --groups, or --K and --M with 1 <= M <= K");
  std::vector<int> sizes(static_cast<std::size_t>(a.M), static_cast<int>(a.K / a.M));
  for (Index m = 0; m < a.K % a.M; ++m) ++sizes[static_cast<std::size_t>(m)];
  return GroupPartition::from_sizes(sizes);
}

int run_prune(const Context& ctx, const PruneArgs& a) {
  if (a.trials < 0) throw std::invalid_argument("--trials must be nonnegative");
  const GroupPartition g = prune_groups(a);
  const Rng root = stream(a.c.seed, kPrune);
  VectorXd vs(g.groups());
  if (!a.v_star.empty()) {
    if (static_cast<Index>(a.v_star.size()) != g.groups()) throw std::invalid_argument("--vstar needs one value per group");
    for (Index m = 0; m < vs.size(); ++m) vs(m) = a.v_star[static_cast<std::size_t>(m)];
  } else {
    Rng rng = root.split(0);
    for (Index m = 0; m < vs.size(); ++m) vs(m) = rng.normal();
  }
  const TheoryKernel kind = a.kernel == "gram" ? TheoryKernel::Gram : TheoryKernel::Gaussian;
  const PruneComparison cmp = compare_pruning(g, vs, a.kn, kind, a.beta);

  json j;
  j["negdep"] = version();
  j["seed"] = a.c.seed;
  j["K"] = g.units();
  j["M"] = g.groups();
  std::vector<Index> sizes;
  for (const auto& members : g.members()) sizes.push_back(static_cast<Index>(members.size()));
  j["groups"] = sizes;
  j["kn"] = a.kn;
  j["kernel"] = a.kernel;
  if (kind == TheoryKernel::Gaussian) j["beta"] = a.beta;
  j["v_star"] = std::vector<double>(vs.data(), vs.data() + vs.size());
  j["E_dpp"] = cmp.e_dpp;
  j["E_bernoulli"] = cmp.e_bernoulli;
  j["E_conditional_poisson"] = cmp.e_conditional_poisson;
  j["ratio"] = json_value(cmp.e_bernoulli > 0.0 ? cmp.e_dpp / cmp.e_bernoulli : kNaN);
  j["marginals"] = std::vector<double>(cmp.marginals.data(), cmp.marginals.data() + cmp.marginals.size());
  if (a.trials > 0) {
    const SubsetDistribution law = kdpp_law(theory_kernel(grouped_macro(g).Q, kind, a.beta), a.kn);
    const auto& p = law.probabilities();
    std::vector<double> cdf(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = (acc += p[i]);
    double total = 0.0;
    for (int t = 0; t < a.trials; ++t) {
      Rng rng = root.split(1 + static_cast<std::uint64_t>(t));
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform() * acc);
      const auto mask = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
      total += pruned_error_grouped(mask, g, vs);
    }
    j["trials"] = a.trials;
    j["E_dpp_mc"] = total / a.trials;
  }
  emit(ctx, a.c.out, j.dump(2) + "\n");
  write_run_manifest(ctx, a.c, "prune");
  return kOk;
}

// ---------------------------------------------------------------------------
// quantum

struct QuantumArgs {
  Common c;
  int n = 4;
  int r = 2;
  std::string unitary = "random";
  int reps = 1000;
};

void setup_quantum(CLI::App& app, QuantumArgs& a) {
  auto* s = app.add_subcommand("quantum", "Slater-determinant state vector: sample occupations, compare laws");
  s->add_option("--n", a.n, "Fermionic modes (<= 14)")->capture_default_str();
  s->add_option("--r", a.r, "Particles")->capture_default_str();
  s->add_option("--unitary", a.unitary, "Unitary CSV (cells re+imi) or 'random'")->capture_default_str();
  s->add_option("--reps", a.reps, "Measurements")->capture_default_str();
  add_common(s, a.c);
}

int run_quantum(const Context& ctx, const QuantumArgs& a) {
  if (a.reps < 1) throw std::invalid_argument("--reps must be positive");
  const Rng root = stream(a.c.seed, kQuantum);
  MatrixXc v;
  if (a.unitary == "random") {
    Rng rng = root.split(0);
    v = haar_unitary(a.n, rng);
  } else {
    v = io::complex_matrix_from_csv(io::read_file(a.unitary));
    if (v.cols() != a.n) throw std::invalid_argument("unitary size disagrees with --n");
  }
  const StateVector psi = prepare_slater(v, a.r);
  const SubsetDistribution law = occupation_distribution(psi);
  const SubsetDistribution classical = classical_projection_law(v, a.r);
  Rng rng = root.split(1);
  const auto draws = measure_many(psi, a.reps, rng);
  std::vector<double> freq(law.probabilities().size(), 0.0);
  for (auto x : draws) freq[x] += 1.0 / a.reps;
  std::string text = io::output_header(a.c.seed);
  text += "# tv_exact=" + format_double(stats::total_variation(law.probabilities(), classical.probabilities())) +
          " tv_empirical=" + format_double(stats::total_variation(freq, classical.probabilities())) + "\n";
  for (auto x : draws) text += join_items(from_mask(x)) + "\n";
  emit(ctx, a.c.out, text);
  write_run_manifest(ctx, a.c, "quantum");
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  Common c;
  std::string suite = "fast";
  std::string fixtures = NEGDEP_DEFAULT_FIXTURES;
  std::vector<int> only;
  std::string timing;
};

void setup_verify(CLI::App& app, VerifyArgs& a) {
  auto* s = app.add_subcommand("verify", "Run the acceptance checks and write a manifest");
  s->add_option("--suite", a.suite, "fast or full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
  s->add_option("--fixtures", a.fixtures, "Kernel fixture directory, empty to skip")->capture_default_str();
  s->add_option("--only", a.only, "Criterion ids, comma separated")->delimiter(',');
  s->add_option("--timing", a.timing, "Timing JSON path (default <out>.timing.json)");
  add_common(s, a.c);
  a.c.out = "negdep-manifest.json";
}

int run_verify_cmd(const Context& ctx, const VerifyArgs& a) {
  VerifyOptions opt;
  opt.suite = suite_from_string(a.suite);
  opt.seed = a.c.seed;
  opt.fixture_dir = a.fixtures;
  opt.only = a.only;
  for (int id : opt.only)
    if (id < 1 || id > kCriterionCount) throw std::invalid_argument("--only ids must lie in [1, 12]");
  const VerifyReport rep = run_verify(opt, [&](const CriterionResult& r) {
    std::string status = to_string(r.status);
    std::transform(status.begin(), status.end(), status.begin(), [](unsigned char ch) { return std::toupper(ch); });
    ctx.err << "criterion " << r.id << " " << status << "  " << r.title << "  (" << r.detail << ")\n";
  });
  emit(ctx, a.c.out, manifest_json(rep));
  const std::string timing = !a.timing.empty() ? a.timing : (a.c.out == "-" ? "" : a.c.out + ".timing.json");
  if (!timing.empty()) emit(ctx, timing, timing_json(rep));
  if (!a.c.manifest.empty() && a.c.manifest != a.c.out) emit(ctx, a.c.manifest, manifest_json(rep));
  return rep.all_passed() ? kOk : kNumericalError;
}

const CLI::App* parsed_subcommand(const CLI::App& app) {
  for (const CLI::App* s : app.get_subcommands({}))
    if (s->parsed()) return s;
  return nullptr;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Negative-dependence toolbox: DPP samplers, quadrature, coresets, CSS, point processes", "negdep"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  SampleArgs sample;
  QuadArgs quad;
  CoresetArgs coreset;
  CssArgs css;
  GdpArgs gdp;
  NetworkArgs network;
  GafArgs gaf;
  PruneArgs prune;
  QuantumArgs quantum;
  VerifyArgs verify;
  setup_sample(app, sample);
  setup_quadrature(app, quad);
  setup_coreset(app, coreset);
  setup_css(app, css);
  setup_gdp(app, gdp);
  setup_network(app, network);
  setup_gaf(app, gaf);
  setup_prune(app, prune);
  setup_quantum(app, quantum);
  setup_verify(app, verify);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* s = parsed_subcommand(app);
    out << (s ? s->help() : app.help());
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* s = parsed_subcommand(app);
    err << "error: " << e.what() << "\n\n" << (s ? s->help() : app.help());
    return kValidationError;
  }

  const Context ctx{out, err, args};
  const std::string name = parsed_subcommand(app)->get_name();
  try {
    if (name == "sample") return run_sample(ctx, sample);
    if (name == "quadrature") return run_quadrature(ctx, quad);
    if (name == "coreset") return run_coreset(ctx, coreset);
    if (name == "css") return run_css(ctx, css);
    if (name == "gdp") return run_gdp(ctx, gdp);
    if (name == "network") return run_network(ctx, network);
    if (name == "gaf") return run_gaf(ctx, gaf);
    if (name == "prune") return run_prune(ctx, prune);
    if (name == "quantum") return run_quantum(ctx, quantum);
    return run_verify_cmd(ctx, verify);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace negdep::cli
