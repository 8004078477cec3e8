#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include <pybind11/pybind11.h>

#include "negdep/css.hpp"
#include "negdep/gaf.hpp"
#include "negdep/io.hpp"
#include "negdep/kernel.hpp"
#include "negdep/pruning.hpp"
#include "negdep/quadrature.hpp"
#include "negdep/quantum.hpp"
#include "negdep/sampler.hpp"
#include "negdep/spatial.hpp"
#include "negdep/verify.hpp"

namespace py = pybind11;
using namespace negdep;

namespace {

std::vector<double> law_of(const SubsetDistribution& d) { return d.probabilities(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of negdep";
  m.attr("__version__") = version();
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<KernelMatrix>(m, "KernelMatrix")
      .def(py::init([](const MatrixXc& entries, const std::string& kind, bool hermitian) {
             return KernelMatrix(entries, kernel_kind_from_string(kind), hermitian);
           }),
           py::arg("entries"), py::arg("kind") = "likelihood", py::arg("hermitian") = true)
      .def_property_readonly("size", &KernelMatrix::size)
      .def_property_readonly("kind", [](const KernelMatrix& k) { return std::string(to_string(k.kind())); })
      .def_property_readonly("hermitian", &KernelMatrix::hermitian)
      .def_property_readonly("entries", [](const KernelMatrix& k) { return k.entries(); })
      .def("__repr__", [](const KernelMatrix& k) {
        return "KernelMatrix(N=" + std::to_string(k.size()) + ", kind=" + to_string(k.kind()) + ")";
      });

  m.def("projection_from_rows", py::overload_cast<const MatrixXd&>(&projection_from_rows), py::arg("rows"),
        "Marginal kernel projecting onto the span of the given orthonormal rows.");
  m.def("rbf_kernel", &rbf_kernel, py::arg("points"), py::arg("beta"), py::arg("ridge") = 0.0);
  m.def("load_kernel", &io::load_kernel, py::arg("path"));
  m.def("save_kernel", &io::save_kernel, py::arg("kernel"), py::arg("path"));

  m.def(
      "sample_spectral",
      [](const KernelMatrix& k, std::uint64_t seed) {
        Rng rng(seed);
        return sample_spectral(k, rng).items;
      },
      py::arg("kernel"), py::arg("seed") = 0);
  m.def(
      "sample_kdpp",
      [](const KernelMatrix& k, Index size, std::uint64_t seed) {
        Rng rng(seed);
        return sample_kdpp(k, size, rng).items;
      },
      py::arg("kernel"), py::arg("k"), py::arg("seed") = 0);
  m.def(
      "sample_projection",
      [](const KernelMatrix& k, std::uint64_t seed) {
        Rng rng(seed);
        return sample_projection(k, rng).items;
      },
      py::arg("kernel"), py::arg("seed") = 0);
  m.def(
      "brute_force_distribution", [](const KernelMatrix& k) { return law_of(brute_force_distribution(k)); },
      py::arg("kernel"), "Exact law indexed by subset bitmask (bit i = item i).");

  m.def(
      "gauss_legendre",
      [](int n) {
        const QuadratureRule r = gauss_rule_1d(build_basis(Measure::uniform(1), n), n);
        return py::make_tuple(VectorXd(r.nodes.col(0)), r.weights);
      },
      py::arg("n"));

  m.def(
      "leverage_scores", [](const MatrixXd& x, Index k) { return leverage_scores(FeatureMatrix(x), k); },
      py::arg("x"), py::arg("k"));
  m.def(
      "css_expected_error",
      [](const std::string& method, const MatrixXd& x, Index k) {
        const FeatureMatrix fm(x);
        return py::make_tuple(expected_error_exact(css_method_from_string(method), fm, k), fm.optimal_error(k));
      },
      py::arg("method"), py::arg("x"), py::arg("k"), "Returns (expected error, optimal rank-k error).");

  m.def("i2", &i2, py::arg("q_ab"), py::arg("q_aa"), py::arg("q_bb"));
  m.def(
      "compare_pruning",
      [](const std::vector<int>& sizes, const VectorXd& v_star, Index k, const std::string& kernel, double beta) {
        const TheoryKernel kind = kernel == "gaussian" ? TheoryKernel::Gaussian : TheoryKernel::Gram;
        if (kernel != "gram" && kernel != "gaussian") throw std::invalid_argument("kernel must be gram or gaussian");
        const PruneComparison c = compare_pruning(GroupPartition::from_sizes(sizes), v_star, k, kind, beta);
        py::dict d;
        d["E_dpp"] = c.e_dpp;
        d["E_bernoulli"] = c.e_bernoulli;
        d["E_conditional_poisson"] = c.e_conditional_poisson;
        d["marginals"] = c.marginals;
        return d;
      },
      py::arg("group_sizes"), py::arg("v_star"), py::arg("k"), py::arg("kernel") = "gram", py::arg("beta") = 1.0);

  m.def(
      "haar_unitary",
      [](int n, std::uint64_t seed) {
        Rng rng(seed);
        return haar_unitary(n, rng);
      },
      py::arg("n"), py::arg("seed") = 0);
  m.def(
      "occupation_distribution",
      [](const MatrixXc& v, int r) { return law_of(occupation_distribution(prepare_slater(v, r))); },
      py::arg("unitary"), py::arg("r"), "Occupation law of the Slater state built from the first r rows.");
  m.def(
      "projection_dpp_law", [](const MatrixXc& v, int r) { return law_of(classical_projection_law(v, r)); },
      py::arg("unitary"), py::arg("r"));

  m.def("stft_hermite_sup", &stft_hermite_sup_closed, py::arg("k"));
  m.def("spiked_sigma", &spiked_sigma, py::arg("lam"), py::arg("u"), py::arg("d"));
  m.def(
      "gaf_zeros",
      [](const std::string& model, double L, double radius, std::uint64_t seed) {
        Rng rng(seed);
        return find_zeros(sample_gaf(gaf_model_from_string(model), L, radius, rng), radius);
      },
      py::arg("model"), py::arg("L"), py::arg("radius"), py::arg("seed") = 0);

  m.def(
      "verify",
      [](const std::string& suite, std::uint64_t seed, const std::vector<int>& only, const std::string& fixtures) {
        VerifyOptions opt;
        opt.suite = suite_from_string(suite);
        opt.seed = seed;
        opt.only = only;
        opt.fixture_dir = fixtures;
        py::gil_scoped_release release;
        return manifest_json(run_verify(opt));
      },
      py::arg("suite") = "fast", py::arg("seed") = 0, py::arg("only") = std::vector<int>{},
      py::arg("fixtures") = "", "Runs the acceptance checks and returns the manifest JSON.");
}
