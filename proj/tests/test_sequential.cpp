#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"
#include "testinfo/bayes_factor.hpp"
#include "testinfo/criteria.hpp"
#include "testinfo/errors.hpp"
#include "testinfo/evidence.hpp"
#include "testinfo/sequential.hpp"

using namespace tinfo;
using tinfo::test::vec;

TEST_CASE("posterior update with no data returns the prior") {
  const Matrix r = 0.2 * Matrix::Identity(4, 4);
  auto s = posterior_update(vec({1.1, 0, -1.3, 0}), r, Matrix(0, 4), Vector(0), 2.0,
                            Vector::Zero(4));
  CHECK((s.mean - vec({1.1, 0, -1.3, 0})).norm() == 0.0);
  CHECK((s.cov - 2.0 * r).norm() == 0.0);
  CHECK(s.log_bf == 0.0);
}

// The prior scales with the noise variance, so a flat prior (large R) is
// what makes the data dominate.
TEST_CASE("flat prior pulls the posterior mean onto least squares") {
  const Design d = Design::replicated({-1, -0.5, 0, 0.5, 1}, 1, Basis::cubic);
  const Matrix m = d.matrix();
  const Vector x = vec({0.3, -1.2, 0.8, 2.0, -0.1});
  const Vector ls = m.colPivHouseholderQr().solve(x);
  auto s = posterior_update(Vector::Zero(4), 1e10 * Matrix::Identity(4, 4), m, x, 1e-3,
                            Vector::Zero(4));
  CHECK((s.mean - ls).norm() < 1e-6);
}

TEST_CASE("singular prior scale is rejected") {
  Matrix r = Matrix::Zero(2, 2);
  r(0, 0) = 1.0;
  CHECK_THROWS_AS(posterior_update(Vector::Zero(2), r, Matrix::Identity(2, 2), Vector::Zero(2),
                                   1.0, Vector::Zero(2)),
                  Error);
}

TEST_CASE("posterior matches 2-d grid quadrature") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Stream s(seed);
    const Vector eta = vec({s.normal(), s.normal()});
    Matrix a(2, 2);
    a << 0.6 * s.normal(), 0.6 * s.normal(), 0.6 * s.normal(), 0.6 * s.normal();
    const Matrix r = a * a.transpose() + 0.2 * Matrix::Identity(2, 2);
    const double s2 = 0.5 + s.uniform();
    const Design d = Design::replicated({-0.9, -0.2, 0.4, 0.8}, 1, Basis::intercept_slope);
    const Matrix m = d.matrix();
    Vector x(4);
    for (int i = 0; i < 4; ++i) x[i] = 1.0 + 2.0 * s.normal();

    const Matrix prior_prec = (s2 * r).inverse();
    auto log_post = [&](double b0, double b1) {
      Vector b = vec({b0, b1});
      Vector dv = b - eta;
      return -0.5 * dv.dot(prior_prec * dv) - 0.5 * (x - m * b).squaredNorm() / s2;
    };
    // coarse pass locates the mass, the fine pass integrates it
    double c0 = 0, c1 = 0, w0 = 20, w1 = 20;
    for (int pass = 0; pass < 2; ++pass) {
      const int n = pass == 0 ? 401 : 801;
      double lo0 = c0 - w0, lo1 = c1 - w1, h0 = 2 * w0 / (n - 1), h1 = 2 * w1 / (n - 1);
      double peak = -1e300;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) peak = std::max(peak, log_post(lo0 + i * h0, lo1 + j * h1));
      double z = 0, m0 = 0, m1 = 0, s00 = 0, s01 = 0, s11 = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double b0 = lo0 + i * h0, b1 = lo1 + j * h1;
          const double w = std::exp(log_post(b0, b1) - peak);
          z += w;
          m0 += w * b0;
          m1 += w * b1;
          s00 += w * b0 * b0;
          s01 += w * b0 * b1;
          s11 += w * b1 * b1;
        }
      m0 /= z;
      m1 /= z;
      const double v00 = s00 / z - m0 * m0, v01 = s01 / z - m0 * m1, v11 = s11 / z - m1 * m1;
      if (pass == 1) {
        auto st = posterior_update(eta, r, m, x, s2, Vector::Zero(2));
        CHECK(std::abs(st.mean[0] - m0) < 1e-4);
        CHECK(std::abs(st.mean[1] - m1) < 1e-4);
        CHECK(std::abs(st.cov(0, 0) - v00) < 1e-4);
        CHECK(std::abs(st.cov(0, 1) - v01) < 1e-4);
        CHECK(std::abs(st.cov(1, 1) - v11) < 1e-4);
      }
      c0 = m0;
      c1 = m1;
      w0 = 10 * std::sqrt(v00);
      w1 = 10 * std::sqrt(v11);
    }
  }
}

TEST_CASE("posterior log BF agrees with the exact Bayes factor") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    auto rl = test::random_linear(seed);
    Stream s(seed + 99);
    const Vector x = simulate(rl.problem, rl.design, Which::h1, std::nullopt, s);
    auto st = posterior_update(rl.alt_mean, rl.cov_scale, rl.design.matrix(), x,
                               rl.noise_variance, rl.null);
    CHECK(st.log_bf == doctest::Approx(bf_linear_gaussian(rl.problem, rl.design, x).log_bf));
  }
}

TEST_CASE("two-step update equals the stacked update") {
  for (std::uint64_t seed = 30; seed < 50; ++seed) {
    auto rl = test::random_linear(seed);
    Stream s(seed);
    const auto d = static_cast<Eigen::Index>(rl.null.size());
    const Design d1 = rl.design;
    const Design d2 = Design::replicated({-0.7, 0.1, 0.9}, 2, d1.basis());
    const Design both = d1.concat(d2);
    const Vector x = simulate(rl.problem, both, Which::h1, std::nullopt, s);
    const Vector x1 = x.head(static_cast<Eigen::Index>(d1.rows()));
    const Vector x2 = x.tail(static_cast<Eigen::Index>(d2.rows()));
    const double s2 = rl.noise_variance;

    auto st1 = posterior_update(rl.alt_mean, rl.cov_scale, d1.matrix(), x1, s2, rl.null);
    auto st2 = posterior_update(st1.mean, st1.cov / s2, d2.matrix(), x2, s2, rl.null);
    auto all = posterior_update(rl.alt_mean, rl.cov_scale, both.matrix(), x, s2, rl.null);
    CHECK((st2.mean - all.mean).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((st2.cov - all.cov).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((all.cov - all.cov.transpose()).norm() < 1e-12);
    CHECK(d == all.mean.size());
  }
}

TEST_CASE("sep_max examples") {
  const Vector null = Vector::Zero(4);
  PosteriorState st{Vector::Zero(4), Matrix::Identity(4, 4), 0.0};
  CHECK(sep_max(st, null, Basis::cubic) == -1.0);
  st.mean = vec({0, 1, 0, 0});
  CHECK(std::abs(sep_max(st, null, Basis::cubic)) == 1.0);
  st.mean = vec({0, 0, 1, 0});
  CHECK(std::abs(sep_max(st, null, Basis::cubic)) == 1.0);
  st.mean = vec({1, 0, -1, 0});
  CHECK(sep_max(st, null, Basis::cubic) == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS_AS(sep_max(st, null, Basis::cubic, {}, 50), Error);
}

TEST_CASE("constrained menu stays inside the box") {
  auto check = [](double sep, std::vector<double> want) {
    auto menu = build_constrained_menu(sep);
    CHECK(menu[0].points() == std::vector<double>{-1, -0.5, 0, 0.5, 1});
    REQUIRE(menu[1].size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(menu[1].points()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  };
  check(0.0, {-0.2, -0.1, 0.0, 0.1, 0.2});
  check(1.0, {0.6, 0.7, 0.8, 0.9, 1.0});
  check(-1.0, {-1.0, -0.9, -0.8, -0.7, -0.6});
  check(0.9, {0.6, 0.7, 0.8, 0.9, 1.0});
  CHECK_THROWS_AS(build_constrained_menu(1.5), Error);
}

TEST_CASE("LR power sits at the size under the null and grows with separation") {
  const Matrix m = Design::replicated({-1, -0.5, 0, 0.5, 1}, 2, Basis::cubic).matrix();
  const Vector null = Vector::Zero(4);
  CHECK(lr_power(m, null, null, 1.0) == doctest::Approx(0.05));
  double last = 0.05;
  for (double a : {0.2, 0.5, 1.0, 2.0}) {
    const double p = lr_power(m, vec({a, 0, 0, 0}), null, 1.0);
    CHECK(p > last);
    last = p;
  }
}

TEST_CASE("LR power agrees with a simulated chi-square test") {
  const Matrix m = Design::replicated({-1, 0, 1}, 2, Basis::intercept_slope).matrix();
  const Vector null = vec({0.0, 0.0}), beta = vec({0.4, -0.3});
  const double s2 = 1.5;
  const double crit = 5.991464547107979;  // chi2_2 upper 5%
  Stream s(7);
  const int n = 100000;
  int hits = 0;
  const Matrix proj = m * (m.transpose() * m).inverse() * m.transpose();
  for (int i = 0; i < n; ++i) {
    Vector x = m * beta;
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] += std::sqrt(s2) * s.normal();
    if (x.dot(proj * x) / s2 > crit) ++hits;
  }
  const double p = static_cast<double>(hits) / n;
  CHECK(std::abs(lr_power(m, beta, null, s2) - p) < 4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("conditional TK and simulated conditional log information pick the same menu entry") {
  const Vector null = Vector::Zero(4);
  const Matrix r = 0.2 * Matrix::Identity(4, 4);
  const Vector eta = vec({1.1, 0, -1.3, 0});
  const TwoHypothesisProblem problem{0.5, 0.5, Hypothesis::linear_point(null, 1.0),
                                     Hypothesis::linear_gaussian(eta, r, 1.0)};
  const Design d_obs = Design::replicated({-1, -0.5, 0, 0.5, 1}, 1, Basis::cubic);
  int agree = 0, total = 0;
  for (std::uint64_t k = 0; k < 40; ++k) {
    Stream s = Stream(2024).substream(k);
    const Vector x = simulate(problem, d_obs, Which::h1, std::nullopt, s);
    const auto st = posterior_update(eta, r, d_obs.matrix(), x, 1.0, null);
    const auto menu = build_constrained_menu(sep_max(st, null, Basis::cubic));
    double tk[2], mc[2];
    for (int i = 0; i < 2; ++i) {
      tk[i] = conditional_tk(menu[i].matrix(), null, st.mean, st.cov, st.log_bf).value;
      mc[i] = conditional_test_info(problem, d_obs, x, menu[i], EvidenceFunction::log(), {},
                                    Order::h0_h1, {4000, 11 + k, false})
                  .value;
    }
    ++total;
    if ((tk[0] > tk[1]) == (mc[0] > mc[1])) ++agree;
  }
  CHECK(agree >= 0.95 * total);
}

// Simulating under the point null is heavy-tailed once x1 strongly favours
// H1, so the check keeps datasets with moderate observed evidence.
TEST_CASE("symmetric evidence: dual conditional informations differ by the factor z(x1)") {
  const Vector null = Vector::Zero(4);
  const Matrix r = 0.2 * Matrix::Identity(4, 4);
  const Vector eta = vec({0.3, 0, -0.4, 0});
  const TwoHypothesisProblem problem{0.5, 0.5, Hypothesis::linear_point(null, 1.0),
                                     Hypothesis::linear_gaussian(eta, r, 1.0)};
  const Design d_obs = Design::replicated({-1, -0.5, 0, 0.5, 1}, 1, Basis::cubic);
  const auto v = EvidenceFunction::symmetrized_kl();
  int checked = 0, agree = 0, kept = 0;
  for (std::uint64_t k = 0; k < 40 && kept < 8; ++k) {
    Stream s = Stream(77).substream(k);
    const Which w = k % 2 ? Which::h0 : Which::h1;
    const Vector x = simulate(problem, d_obs, w, std::nullopt, s);
    const auto st = posterior_update(eta, r, d_obs.matrix(), x, 1.0, null);
    if (std::abs(st.log_bf) > 1.0) continue;
    ++kept;
    const double z = std::exp(st.log_bf);
    const auto pair = build_constrained_menu(sep_max(st, null, Basis::cubic));
    const Design menu[3] = {pair[0], pair[1], Design::replicated({0.0}, 5, Basis::cubic)};
    CriterionEstimate a[3], b[3];
    for (int i = 0; i < 3; ++i) {
      a[i] = conditional_test_info(problem, d_obs, x, menu[i], v, {}, Order::h0_h1,
                                   {20000, 5, true});
      b[i] = conditional_test_info(problem, d_obs, x, menu[i], v, {}, Order::h1_h0,
                                   {20000, 5, true});
      CHECK(std::abs(a[i].value - z * b[i].value) <
            5 * std::hypot(a[i].standard_error, z * b[i].standard_error) + 1e-9);
    }
    auto separated = [](const CriterionEstimate& e, const CriterionEstimate& f) {
      return std::abs(e.value - f.value) > 3 * std::hypot(e.standard_error, f.standard_error);
    };
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        if (!separated(a[i], a[j]) || !separated(b[i], b[j])) continue;
        ++checked;
        if ((a[i].value > a[j].value) == (b[i].value > b[j].value)) ++agree;
      }
  }
  CHECK(kept >= 5);
  CHECK(checked >= 5);
  CHECK(agree == checked);
}

TEST_CASE("study config validation") {
  SequentialStudyConfig c;
  c.beta_draws = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK_THROWS_AS(parse_scenario("spiral"), Error);
  CHECK(parse_scenario("random-curves") == Scenario::random_curves);
  CHECK(parse_procedure("TK") == Procedure::TK);
}

TEST_CASE("small study runs, is reproducible and writes the csv") {
  SequentialStudyConfig c;
  c.beta_draws = 2;
  c.datasets_per_beta = 3;
  c.inner_draws = 100;
  c.restarts = 1;
  c.max_passes = 3;
  const std::vector<Procedure> procs{Procedure::P, Procedure::TK, Procedure::D};
  auto a = run_sequential_study(c, procs, false, 3);
  auto b = run_sequential_study(c, procs, false, 3);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].power == b[i].power);
    CHECK(a[i].power >= 0.05);
    CHECK(a[i].power <= 1.0);
    CHECK(a[i].cells == 6);
    CHECK(std::isnan(a[i].frac_design_i));
  }
  auto con = run_sequential_study(c, procs, true, 3);
  for (const auto& row : con) CHECK((row.frac_design_i >= 0.0 && row.frac_design_i <= 1.0));
  std::ostringstream out;
  write_study_csv(out, con);
  CHECK(out.str().rfind("procedure,scenario,constrained,power,se,frac_design_i\n", 0) == 0);
  CHECK(out.str().find("TK,parabola,true,") != std::string::npos);
}
