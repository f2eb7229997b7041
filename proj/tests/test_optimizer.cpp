#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "support.hpp"
#include "testinfo/criteria.hpp"
#include "testinfo/errors.hpp"
#include "testinfo/optimizer.hpp"

using namespace tinfo;
using tinfo::test::vec;

namespace {

DesignCriterion d_crit(const Matrix& r) {
  return [r](const Design& d, std::uint64_t) { return d_criterion(d.matrix(), r, 1.0); };
}

DesignCriterion tk_crit(Vector null, Vector eta, Matrix r) {
  return [=](const Design& d, std::uint64_t) {
    return tk_closed_form(d.matrix(), null, eta, r, 1.0);
  };
}

}  // namespace

TEST_CASE("uniform grid hits both endpoints") {
  auto g = CandidateGrid::uniform(21, Basis::intercept_slope);
  CHECK(g.points.size() == 21);
  CHECK(g.points.front() == -1.0);
  CHECK(g.points.back() == 1.0);
  CHECK(g.points[10] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("D-optimal simple regression splits between the ends") {
  auto res = exchange_optimize(d_crit(Matrix::Identity(2, 2)),
                               CandidateGrid::uniform(21, Basis::intercept_slope),
                               {4, 20, 5, 1});
  CHECK_FALSE(res.aborted);
  CHECK(res.design.points() == std::vector<double>{-1.0, -1.0, 1.0, 1.0});
}

TEST_CASE("TK places every point at the end picked by the sign of delta") {
  const auto grid = CandidateGrid::uniform(21, Basis::intercept_slope);
  const Matrix r = 0.3 * Matrix::Identity(2, 2);
  auto pos = exchange_optimize(tk_crit(vec({0.0, 0.0}), vec({0.5, 0.8}), r), grid, {4, 20, 3, 2});
  CHECK(pos.design.points() == std::vector<double>(4, 1.0));
  auto neg = exchange_optimize(tk_crit(vec({0.0, 0.0}), vec({0.5, -0.8}), r), grid, {4, 20, 3, 2});
  CHECK(neg.design.points() == std::vector<double>(4, -1.0));
}

TEST_CASE("deterministic traces never decrease") {
  auto res = exchange_optimize(d_crit(vec({1.0, 0.5}).asDiagonal()),
                               CandidateGrid::uniform(11, Basis::intercept_slope), {6, 20, 3, 9});
  REQUIRE(res.trace.size() >= 1);
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].value > res.trace[i - 1].value);
  }
  std::ostringstream os;
  write_trace_csv(os, res.trace);
  CHECK(os.str().rfind("pass,candidate,value,se\n", 0) == 0);
}

TEST_CASE("constant criterion stops after one pass") {
  auto flat = [](const Design&, std::uint64_t) { return CriterionEstimate{"D", 1.0, 0.0, 0, 0}; };
  auto res = exchange_optimize(flat, CandidateGrid::uniform(5, Basis::identity), {3, 20, 4, 0});
  CHECK(res.iterations == 4);
  CHECK(res.restart == 0);
  CHECK(res.trace.size() == 1);
}

TEST_CASE("grid order does not matter and seeds reproduce") {
  auto g = CandidateGrid::uniform(9, Basis::cubic);
  auto shuffled = g;
  std::reverse(shuffled.points.begin(), shuffled.points.end());
  std::swap(shuffled.points[1], shuffled.points[5]);
  const auto crit = d_crit(Matrix::Identity(4, 4));
  auto a = exchange_optimize(crit, g, {5, 20, 2, 4});
  auto b = exchange_optimize(crit, shuffled, {5, 20, 2, 4});
  CHECK(a.design.points() == b.design.points());
  CHECK(a.value.value == b.value.value);
}

TEST_CASE("stochastic criteria are reproducible") {
  const auto r = test::random_linear(3);
  const auto crit = [&](const Design& d, std::uint64_t seed) {
    return expected_test_info(r.problem, d, EvidenceFunction::posterior_prior_ratio(0.5), {},
                              Order::h0_h1, {200, seed, false});
  };
  auto g = CandidateGrid::uniform(7, r.design.basis());
  auto a = exchange_optimize(crit, g, {3, 5, 2, 8});
  auto b = exchange_optimize(crit, g, {3, 5, 2, 8});
  CHECK(a.design.points() == b.design.points());
}

TEST_CASE("failing criterion aborts with a partial trace") {
  int calls = 0;
  auto failing = [&](const Design& d, std::uint64_t) {
    if (++calls > 30) throw Error(Errc::degenerate_estimate, "boom");
    return d_criterion(d.matrix(), Matrix::Identity(2, 2), 1.0);
  };
  auto res = exchange_optimize(failing, CandidateGrid::uniform(21, Basis::intercept_slope),
                               {4, 20, 5, 0});
  CHECK(res.aborted);
  CHECK(res.error == "boom");
  CHECK_FALSE(res.trace.empty());
}

TEST_CASE("menu selection") {
  const Design a = Design::replicated({-1.0, 1.0}, 1, Basis::intercept_slope);
  const Design b = Design::replicated({-0.1, 0.1}, 1, Basis::intercept_slope);
  const auto crit = d_crit(Matrix::Identity(2, 2));
  CHECK(constrained_select(crit, {b}, 0).selected == 0);
  CHECK(constrained_select(crit, {b, a}, 0).selected == 1);
  CHECK(constrained_select(crit, {a, b, a}, 0).selected == 0);
  CHECK(constrained_select(crit, {b, b}, 0).selected == 0);
  CHECK_THROWS_AS(constrained_select(crit, {}, 0), Error);
}
