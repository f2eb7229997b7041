#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "testinfo/bayes_factor.hpp"
#include "testinfo/criteria.hpp"
#include "testinfo/errors.hpp"
#include "testinfo/evidence.hpp"
#include "testinfo/models.hpp"

namespace py = pybind11;
using namespace tinfo;

namespace {

Order parse_order(const std::string& s) {
  if (s == "h0-h1") return Order::h0_h1;
  if (s == "h1-h0") return Order::h1_h0;
  throw Error(Errc::invalid_argument, "order must be 'h0-h1' or 'h1-h0'");
}

EngineOptions engine_options(const std::string& engine, int draws, std::uint64_t seed) {
  return {parse_engine(engine), draws, seed};
}

py::dict estimate_dict(const CriterionEstimate& e) {
  py::dict d;
  d["criterion"] = e.criterion;
  d["value"] = e.value;
  d["se"] = e.standard_error;
  d["draws"] = e.draws;
  d["seed"] = e.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Expected test information for Bayesian and likelihood-ratio tests";

  static py::exception<Error> exc(m, "Error", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(exc.ptr())(e.what());
      err.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(exc.ptr(), err.ptr());
    }
  });

  py::class_<EvidenceFunction>(m, "EvidenceFunction")
      .def_static("log", &EvidenceFunction::log)
      .def_static("posterior_prior_ratio", &EvidenceFunction::posterior_prior_ratio,
                  py::arg("prior0"))
      .def_static("symmetrized_kl", &EvidenceFunction::symmetrized_kl)
      .def_static("custom", &EvidenceFunction::custom, py::arg("name"), py::arg("fn"))
      .def_static("preset", &EvidenceFunction::preset, py::arg("name"),
                  py::arg("prior0") = 0.5)
      .def_property_readonly("name", &EvidenceFunction::name)
      .def_property_readonly("kind",
                             [](const EvidenceFunction& v) { return std::string(to_string(v.kind())); })
      .def_property_readonly("prior0", &EvidenceFunction::prior0)
      .def("__call__", &EvidenceFunction::operator())
      .def("at_log", &EvidenceFunction::at_log)
      .def("baseline", &EvidenceFunction::baseline)
      .def("swapped", &EvidenceFunction::swapped)
      .def("conversion_number", [](const EvidenceFunction& v) { return conversion_number(v); });

  py::class_<Design>(m, "Design")
      .def(py::init([](std::vector<double> points, std::vector<int> reps, const std::string& basis,
                       double lo, double hi) {
             return Design(std::move(points), std::move(reps), parse_basis(basis), Box{lo, hi});
           }),
           py::arg("points"), py::arg("replications"), py::arg("basis") = "intercept-slope",
           py::arg("lo") = -1.0, py::arg("hi") = 1.0)
      .def_property_readonly("points", &Design::points)
      .def_property_readonly("replications", &Design::replications)
      .def_property_readonly("basis", [](const Design& d) { return std::string(to_string(d.basis())); })
      .def_property_readonly("rows", &Design::rows)
      .def("matrix", &Design::matrix)
      .def("__len__", &Design::size);

  py::class_<TwoHypothesisProblem>(m, "Problem")
      .def_readonly("prior0", &TwoHypothesisProblem::prior0)
      .def_readonly("prior1", &TwoHypothesisProblem::prior1)
      .def("swapped", &TwoHypothesisProblem::swapped);

  m.def(
      "linear_problem",
      [](const Design& design, const Vector& null, const Vector& alt_mean, const Matrix& alt_cov,
         double noise_variance, double prior0) {
        LinearGaussianModel model{design, noise_variance, null, alt_mean, alt_cov};
        return model.problem(prior0);
      },
      py::arg("design"), py::arg("null"), py::arg("alt_mean"), py::arg("alt_cov"),
      py::arg("noise_variance") = 1.0, py::arg("prior0") = 0.5);
  m.def("link_problem", &link_discrimination_problem, py::arg("mean"), py::arg("cov"),
        py::arg("prior0") = 0.5);

  m.def(
      "simulate",
      [](const TwoHypothesisProblem& p, const Design& d, const std::string& which,
         std::uint64_t seed) {
        require(which == "h0" || which == "h1", Errc::invalid_argument, "which must be h0 or h1");
        Stream rng(seed);
        return simulate(p, d, which == "h0" ? Which::h0 : Which::h1, std::nullopt, rng);
      },
      py::arg("problem"), py::arg("design"), py::arg("which") = "h1", py::arg("seed") = 0);

  m.def(
      "log_bayes_factor",
      [](const TwoHypothesisProblem& p, const Design& d, const Vector& x, const std::string& engine,
         int draws, std::uint64_t seed) {
        auto r = bayes_factor(p, d, x, engine_options(engine, draws, seed));
        return py::make_tuple(r.log_bf, r.standard_error);
      },
      py::arg("problem"), py::arg("design"), py::arg("x"), py::arg("engine") = "exact",
      py::arg("draws") = 1000, py::arg("seed") = 0);

  m.def(
      "expected_test_info",
      [](const TwoHypothesisProblem& p, const Design& d, const EvidenceFunction& v,
         const std::string& engine, int engine_draws, const std::string& order, int draws,
         std::uint64_t seed, bool antithetic) {
        return estimate_dict(expected_test_info(p, d, v, engine_options(engine, engine_draws, seed),
                                                parse_order(order), {draws, seed, antithetic}));
      },
      py::arg("problem"), py::arg("design"), py::arg("evidence"), py::arg("engine") = "exact",
      py::arg("engine_draws") = 1000, py::arg("order") = "h0-h1", py::arg("draws") = 10000,
      py::arg("seed") = 0, py::arg("antithetic") = false);

  m.def(
      "observed_test_info",
      [](const TwoHypothesisProblem& p, const Design& d, const Vector& x,
         const EvidenceFunction& v, const std::string& engine, const std::string& order) {
        return observed_test_info(p, d, x, v, engine_options(engine, 1000, 0), parse_order(order));
      },
      py::arg("problem"), py::arg("design"), py::arg("x"), py::arg("evidence"),
      py::arg("engine") = "exact", py::arg("order") = "h0-h1");

  m.def(
      "tk_closed_form",
      [](const Matrix& mm, const Vector& null, const Vector& alt_mean, const Matrix& cov_scale,
         double noise_variance) {
        return estimate_dict(tk_closed_form(mm, null, alt_mean, cov_scale, noise_variance));
      },
      py::arg("m"), py::arg("null"), py::arg("alt_mean"), py::arg("cov_scale"),
      py::arg("noise_variance") = 1.0);

  m.def(
      "d_criterion",
      [](const Matrix& mm, const Matrix& cov_scale, double noise_variance) {
        return estimate_dict(d_criterion(mm, cov_scale, noise_variance));
      },
      py::arg("m"), py::arg("cov_scale"), py::arg("noise_variance") = 1.0);

  m.def(
      "box_hill",
      [](const TwoHypothesisProblem& p, const Design& d, int draws, std::uint64_t seed) {
        return estimate_dict(box_hill(p, d, {}, {draws, seed, false}));
      },
      py::arg("problem"), py::arg("design"), py::arg("draws") = 2000, py::arg("seed") = 0);

  m.def(
      "appendix_b",
      [](double prior0, double prior1, double alpha, double beta1, double beta2) {
        auto r = appendix_b_example(prior0, prior1, alpha, beta1, beta2);
        py::dict d;
        auto side = [](const AppendixBDesign& s) {
          py::dict o;
          o["box_hill"] = s.box_hill;
          o["p_criterion"] = s.p_criterion;
          o["correct_h0"] = s.correct_h0;
          o["correct_h1"] = s.correct_h1;
          return o;
        };
        d["t1"] = side(r.t1);
        d["t2"] = side(r.t2);
        d["flags"] = py::make_tuple(r.bh1, r.bh2, r.bh3, r.bh4, r.bh5);
        return d;
      },
      py::arg("prior0"), py::arg("prior1"), py::arg("alpha"), py::arg("beta1"), py::arg("beta2"));
}
