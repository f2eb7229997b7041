#include "testinfo/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>

#include "testinfo/errors.hpp"

namespace tinfo {

namespace {

struct McSummary {
  double mean = 0.0;
  double se = 0.0;
  long draws = 0;
};

bool is_engine_failure(Errc code) {
  switch (code) {
    case Errc::degenerate_estimate:
    case Errc::factorization:
    case Errc::singular_matrix:
    case Errc::rank_deficient:
      return true;
    default:
      return false;
  }
}

// Runs f on draw substreams 0..n-1 of `root`; draw i never depends on how
// many draws precede it. Antithetic mode averages each substream with its
// mirror and treats the pair as one sample.
template <class F>
McSummary run_mc(const Stream& root, const McOptions& mc, F&& f) {
  require(mc.draws >= 1, Errc::invalid_argument, "draw count must be positive");
  const long units = mc.antithetic ? (mc.draws + 1) / 2 : mc.draws;
  const long total = mc.antithetic ? 2 * units : units;
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(units));
  long failures = 0;
  auto attempt = [&](Stream s, double& out) {
    try {
      out = f(s);
      if (std::isfinite(out)) return true;
    } catch (const Error& e) {
      if (!is_engine_failure(e.code())) throw;
    }
    ++failures;
    return false;
  };
  for (long i = 0; i < units; ++i) {
    const Stream s = root.substream(static_cast<std::uint64_t>(i));
    double a = 0.0, b = 0.0;
    if (!mc.antithetic) {
      if (attempt(s, a)) samples.push_back(a);
    } else {
      const bool ok_a = attempt(s, a);
      const bool ok_b = attempt(s.mirrored(), b);
      if (ok_a && ok_b) samples.push_back(0.5 * (a + b));
    }
  }
  if (static_cast<double>(failures) > 0.01 * static_cast<double>(total) || samples.empty()) {
    throw Error(Errc::aborted_estimate,
                std::to_string(failures) + " of " + std::to_string(total) +
                    " draws failed in the evaluation engine");
  }
  McSummary out;
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  out.mean = sum / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - out.mean) * (v - out.mean);
  out.se = samples.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  out.draws = static_cast<long>(samples.size()) * (mc.antithetic ? 2 : 1);
  return out;
}

bool both_linear(const TwoHypothesisProblem& p) {
  return p.hyp0.family == Family::linear_gaussian && p.hyp1.family == Family::linear_gaussian;
}

double engine_log_bf(const TwoHypothesisProblem& p, const Design& d, const Vector& x,
                     const EngineOptions& engine, std::uint64_t key) {
  EngineOptions local = engine;
  local.seed = mix64(engine.seed ^ key);
  return bayes_factor(p, d, x, local).log_bf;
}

struct Ordered {
  TwoHypothesisProblem problem;
  EvidenceFunction v;
};

Ordered ordered(const TwoHypothesisProblem& problem, const EvidenceFunction& v, Order order) {
  if (order == Order::h0_h1) return {problem, v};
  return {problem.swapped(), v.swapped()};
}

// log |A| for a symmetric positive definite A.
double log_det_pd(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  require(llt.info() == Eigen::Success, Errc::singular_matrix,
          std::string(what) + " is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Binary entropy in nats.
double entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

// P(H0 | x) from log BF(x|H0,H1).
double posterior_h0(double log_bf, double prior0, double prior1) {
  const double a = log_bf + std::log(prior0) - std::log(prior1);
  if (a == std::numeric_limits<double>::infinity()) return 1.0;
  if (a == -std::numeric_limits<double>::infinity()) return 0.0;
  return a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
}

Hypothesis predictive_source(const Hypothesis& alt, const Design& d1, const Vector& x1) {
  if (alt.is_point()) return alt;
  require(alt.family == Family::linear_gaussian, Errc::unsupported_model,
          "posterior-predictive sampling is only available for linear-Gaussian "
          "or point hypotheses");
  auto post = gaussian_posterior(alt, d1.matrix(), x1);
  Hypothesis h = alt;
  h.mean = std::move(post.mean);
  h.cov = std::move(post.cov);
  return h;
}

}  // namespace

std::string criterion_tag(const EvidenceFunction& v) {
  switch (v.kind()) {
    case EvidenceKind::log: return "TK";
    case EvidenceKind::posterior_prior_ratio: return "P";
    default: return v.name();
  }
}

CriterionEstimate expected_test_info(const TwoHypothesisProblem& problem,
                                     const Design& design, const EvidenceFunction& v,
                                     const EngineOptions& engine, Order order,
                                     const McOptions& mc) {
  problem.validate();
  const auto [p, w] = ordered(problem, v, order);
  const double base = w.baseline();
  std::optional<LinearGaussianBayesFactor> exact;
  if (engine.kind == Engine::exact && both_linear(p)) exact.emplace(p, design);

  auto summary = run_mc(Stream(mc.seed), mc, [&](Stream& s) {
    const Vector x = simulate(p, design, Which::h1, std::nullopt, s);
    const double lbf = exact ? exact->log_bf(x) : engine_log_bf(p, design, x, engine, s.seed());
    return base - w.at_log(lbf);
  });
  return {criterion_tag(v), summary.mean, summary.se, summary.draws, mc.seed};
}

CriterionEstimate tk_closed_form(const Matrix& m, const Vector& null,
                                 const Vector& alt_mean, const Matrix& cov_scale,
                                 double noise_variance) {
  const Eigen::Index d = null.size();
  require(alt_mean.size() == d && cov_scale.rows() == d && cov_scale.cols() == d &&
              (m.rows() == 0 || m.cols() == d),
          Errc::dimension_mismatch, "TK arguments have inconsistent shapes");
  require(noise_variance > 0.0, Errc::invalid_argument, "noise variance must be positive");
  CriterionEstimate out{"TK", 0.0, 0.0, 0, 0};
  if (m.rows() == 0) return out;
  const double quad = (m * (alt_mean - null)).squaredNorm() / noise_variance;
  const Matrix mr = m * cov_scale * m.transpose();
  const Matrix a = Matrix::Identity(m.rows(), m.rows()) + mr;
  out.value = 0.5 * (quad + mr.trace() - log_det_pd(a, "I + M R M'"));
  return out;
}

double observed_test_info(const TwoHypothesisProblem& problem, const Design& design,
                          const Vector& x, const EvidenceFunction& v,
                          const EngineOptions& engine, Order order) {
  const auto [p, w] = ordered(problem, v, order);
  const double lbf = bayes_factor(p, design, x, engine).log_bf;
  return w.baseline() - w.at_log(lbf);
}

CriterionEstimate conditional_test_info(const TwoHypothesisProblem& problem,
                                        const Design& design1, const Vector& x1,
                                        const Design& design2,
                                        const EvidenceFunction& v,
                                        const EngineOptions& engine, Order order,
                                        const McOptions& mc) {
  CriterionEstimate out{"conditional", 0.0, 0.0, 0, mc.seed};
  if (design2.is_empty()) return out;
  problem.validate();
  const auto [p, w] = ordered(problem, v, order);
  const double lbf1 = bayes_factor(p, design1, x1, engine).log_bf;
  const double w1 = w.at_log(lbf1);
  const Hypothesis source = predictive_source(p.hyp1, design1, x1);

  McSummary summary;
  if (engine.kind == Engine::exact && both_linear(p)) {
    // log BF(x1, x2) = log BF(x1) + log p0(x2|x1) - log p1(x2|x1).
    const Matrix m1 = design1.matrix();
    const Matrix m2 = design2.matrix();
    auto posterior_hyp = [&](const Hypothesis& h) {
      auto post = gaussian_posterior(h, m1, x1);
      Hypothesis out_h = h;
      out_h.mean = std::move(post.mean);
      out_h.cov = std::move(post.cov);
      return out_h;
    };
    const GaussianDensity pred0 = linear_marginal(posterior_hyp(p.hyp0), m2);
    const GaussianDensity pred1 = linear_marginal(posterior_hyp(p.hyp1), m2);
    // X2 | x1 under the alternative is exactly the predictive pred1.
    summary = run_mc(Stream(mc.seed), mc, [&](Stream& s) {
      const Vector x2 = pred1.sample(s);
      return w1 - w.at_log(lbf1 + pred0.log_pdf(x2) - pred1.log_pdf(x2));
    });
  } else {
    const Design joint = design1.concat(design2);
    summary = run_mc(Stream(mc.seed), mc, [&](Stream& s) {
      Stream ps = s.substream("parameters");
      const Vector beta = draw_parameters(source, ps);
      Stream ds = s.substream("data");
      const Vector x2 = simulate(source, design2, beta, ds);
      Vector x(x1.size() + x2.size());
      x << x1, x2;
      return w1 - w.at_log(engine_log_bf(p, joint, x, engine, s.seed()));
    });
  }
  out.value = summary.mean;
  out.standard_error = summary.se;
  out.draws = summary.draws;
  return out;
}

CriterionEstimate expected_conditional_test_info(const TwoHypothesisProblem& problem,
                                                 const Design& design1,
                                                 const Design& design2,
                                                 const EvidenceFunction& v,
                                                 const EngineOptions& engine,
                                                 Order order, const McOptions& mc) {
  CriterionEstimate out{"conditional", 0.0, 0.0, 0, mc.seed};
  if (design2.is_empty()) return out;
  problem.validate();
  const auto [p, w] = ordered(problem, v, order);
  const Design joint = design1.concat(design2);
  const Eigen::Index n1 = static_cast<Eigen::Index>(design1.rows());
  std::optional<LinearGaussianBayesFactor> exact1, exact_joint;
  if (engine.kind == Engine::exact && both_linear(p)) {
    exact1.emplace(p, design1);
    exact_joint.emplace(p, joint);
  }
  // The first block of a joint draw is exactly the draw expected_test_info
  // makes on design1 with the same seed.
  auto summary = run_mc(Stream(mc.seed), mc, [&](Stream& s) {
    const Vector x = simulate(p, joint, Which::h1, std::nullopt, s);
    const Vector x1 = x.head(n1);
    double l1, l;
    if (exact1) {
      l1 = exact1->log_bf(x1);
      l = exact_joint->log_bf(x);
    } else {
      l1 = design1.is_empty() ? 0.0 : engine_log_bf(p, design1, x1, engine, s.seed());
      l = engine_log_bf(p, joint, x, engine, s.seed());
    }
    return w.at_log(l1) - w.at_log(l);
  });
  out.value = summary.mean;
  out.standard_error = summary.se;
  out.draws = summary.draws;
  return out;
}

CriterionEstimate conditional_tk(const Matrix& m_mis, const Vector& null,
                                 const Vector& post_mean, const Matrix& post_cov,
                                 double log_bf_obs) {
  auto tk = tk_closed_form(m_mis, null, post_mean, post_cov, 1.0);
  tk.value += log_bf_obs;
  return tk;
}

CriterionEstimate d_criterion(const Matrix& m, const Matrix& cov_scale, double noise_variance) {
  const Eigen::Index d = cov_scale.rows();
  require(cov_scale.cols() == d && (m.rows() == 0 || m.cols() == d),
          Errc::dimension_mismatch, "D-criterion arguments have inconsistent shapes");
  require(noise_variance > 0.0, Errc::invalid_argument, "noise variance must be positive");
  Eigen::LLT<Matrix> llt(cov_scale);
  require(llt.info() == Eigen::Success, Errc::singular_matrix,
          "prior covariance scale R must be positive definite");
  Matrix info = llt.solve(Matrix::Identity(d, d));
  if (m.rows() > 0) info += m.transpose() * m;
  info = 0.5 * (info + info.transpose());
  const double value = log_det_pd(info, "M'M + R^-1") -
                       static_cast<double>(d) * std::log(noise_variance);
  return {"D", value, 0.0, 0, 0};
}

CriterionEstimate d_conditional(const Matrix& m_mis, const Matrix& post_cov) {
  const Eigen::Index d = post_cov.rows();
  require(post_cov.cols() == d && (m_mis.rows() == 0 || m_mis.cols() == d),
          Errc::dimension_mismatch, "conditional D arguments have inconsistent shapes");
  Eigen::LLT<Matrix> llt(post_cov);
  require(llt.info() == Eigen::Success, Errc::singular_matrix,
          "posterior covariance must be positive definite");
  if (m_mis.rows() == 0) return {"D", 0.0, 0.0, 0, 0};
  // log|V| + log|M'M + V^-1| = log|I + L' M'M L| with V = L L'.
  const Matrix l = llt.matrixL();
  Matrix a = l.transpose() * (m_mis.transpose() * m_mis) * l;
  a.diagonal().array() += 1.0;
  a = 0.5 * (a + a.transpose());
  return {"D", log_det_pd(a, "I + L'M'ML"), 0.0, 0, 0};
}

CriterionEstimate box_hill(const TwoHypothesisProblem& problem, const Design& design,
                           const EngineOptions& engine, const McOptions& mc) {
  problem.validate();
  const double pi0 = problem.prior0, pi1 = problem.prior1;
  std::optional<LinearGaussianBayesFactor> exact;
  if (engine.kind == Engine::exact && both_linear(problem)) exact.emplace(problem, design);
  // Stratified over the mixture: each hypothesis gets its own block of draws.
  auto stratum = [&](Which which, const char* name) {
    return run_mc(Stream(mc.seed).substream(name), mc, [&](Stream& s) {
      const Vector x = simulate(problem, design, which, std::nullopt, s);
      const double lbf =
          exact ? exact->log_bf(x) : engine_log_bf(problem, design, x, engine, s.seed());
      return entropy(posterior_h0(lbf, pi0, pi1));
    });
  };
  const auto h0 = stratum(Which::h0, "h0");
  const auto h1 = stratum(Which::h1, "h1");
  CriterionEstimate out;
  out.criterion = "BH";
  out.value = entropy(pi0) - (pi0 * h0.mean + pi1 * h1.mean);
  out.standard_error = std::hypot(pi0 * h0.se, pi1 * h1.se);
  out.draws = h0.draws + h1.draws;
  out.seed = mc.seed;
  return out;
}

CriterionEstimate prior_mean_power(const TwoHypothesisProblem& problem,
                                   const Design& design, const PowerOptions& options) {
  problem.validate();
  require(options.size > 0.0 && options.size < 1.0, Errc::invalid_argument,
          "test size must lie in (0,1)");
  require(options.outer_draws >= 1, Errc::invalid_argument, "outer draw count must be positive");
  require(static_cast<double>(options.calibration_draws) >= 20.0 / options.size - 1e-9,
          Errc::insufficient_calibration,
          "calibration needs at least 20/size datasets (got " +
              std::to_string(options.calibration_draws) + ")");
  const int power_draws = options.power_draws > 0 ? options.power_draws : options.calibration_draws;
  const Stream root(options.seed);

  // Datasets both models fit equally well (e.g. separated data) give a
  // statistic that is zero up to optimizer residue; snap those to an exact
  // tie so the residue cannot pass for evidence.
  auto statistic = [&](const Vector& x) {
    const double t = -lr_mle_plugin(problem, design, x).log_bf;
    return std::abs(t) < 1e-6 ? 0.0 : t;
  };

  std::vector<double> powers;
  powers.reserve(static_cast<std::size_t>(options.outer_draws));
  std::vector<double> t(static_cast<std::size_t>(options.calibration_draws));
  for (int o = 0; o < options.outer_draws; ++o) {
    const Stream s = root.substream(static_cast<std::uint64_t>(o));
    Stream b0s = s.substream("beta0"), b1s = s.substream("beta1");
    const Vector beta0 = draw_parameters(problem.hyp0, b0s);
    const Vector beta1 = draw_parameters(problem.hyp1, b1s);

    const Stream cal = s.substream("calibration");
    for (int j = 0; j < options.calibration_draws; ++j) {
      Stream ds = cal.substream(static_cast<std::uint64_t>(j));
      t[static_cast<std::size_t>(j)] = statistic(simulate(problem.hyp0, design, beta0, ds));
    }
    const auto k = static_cast<std::size_t>(
        std::ceil((1.0 - options.size) * options.calibration_draws)) - 1;
    std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(k), t.end());
    const double critical = t[k];

    const Stream pw = s.substream("power");
    int rejections = 0;
    for (int j = 0; j < power_draws; ++j) {
      Stream ds = pw.substream(static_cast<std::uint64_t>(j));
      if (statistic(simulate(problem.hyp1, design, beta1, ds)) > critical) ++rejections;
    }
    powers.push_back(static_cast<double>(rejections) / power_draws);
  }
  const double n = static_cast<double>(powers.size());
  double mean = 0.0;
  for (double v : powers) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : powers) ss += (v - mean) * (v - mean);
  CriterionEstimate out;
  out.criterion = "power";
  out.value = mean;
  out.standard_error = powers.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  out.draws = options.outer_draws;
  out.seed = options.seed;
  return out;
}

FractionResult fraction_observed(const TwoHypothesisProblem& problem,
                                 const Design& design1, const Vector& x1,
                                 const Design& design2, const EvidenceFunction& v,
                                 const EngineOptions& engine, const McOptions& mc) {
  FractionResult r;
  const double lbf = bayes_factor(problem, design1, x1, engine).log_bf;
  r.order = lbf <= 0.0 ? Order::h0_h1 : Order::h1_h0;
  r.observed = observed_test_info(problem, design1, x1, v, engine, r.order);
  if (design2.is_empty()) {
    r.fraction = 1.0;
    return r;
  }
  auto cond = conditional_test_info(problem, design1, x1, design2, v, engine, r.order, mc);
  r.conditional = cond.value;
  r.conditional_se = cond.standard_error;
  const double denom = r.observed + r.conditional;
  if (!(denom > 0.0)) {
    std::cerr << "warning: fraction_observed denominator " << denom
              << " is not positive; clamping\n";
    r.clamped = true;
    r.fraction = r.observed > 0.0 ? 1.0 : 0.0;
    return r;
  }
  const double f = r.observed / denom;
  r.clamped = f < 0.0 || f > 1.0;
  if (r.clamped) {
    std::cerr << "warning: fraction_observed " << f << " outside [0,1]; clamping\n";
  }
  r.fraction = std::clamp(f, 0.0, 1.0);
  return r;
}

double ri1(const Hypothesis& model, const Design& design_obs, const Vector& x_obs,
           const Design& design_mis, const Vector& theta0, const McOptions& mc) {
  model.validate();
  const auto fit = mle_fit(model, design_obs, x_obs);
  const Vector& theta = fit.params;
  const double num = log_likelihood(model, design_obs, theta, x_obs) -
                     log_likelihood(model, design_obs, theta0, x_obs);
  double denom = num;
  if (!design_mis.is_empty()) {
    auto summary = run_mc(Stream(mc.seed), mc, [&](Stream& s) {
      Stream ds = s.substream("data");
      const Vector xm = simulate(model, design_mis, theta, ds);
      return log_likelihood(model, design_mis, theta, xm) -
             log_likelihood(model, design_mis, theta0, xm);
    });
    denom += summary.mean;
  }
  require(denom > 0.0, Errc::undefined_fraction,
          "expected complete-data log likelihood ratio is not positive");
  return num / denom;
}

double fisher_fraction(const FisherInfo& info, double conversion) {
  require(info.observed >= 0.0 && info.missing >= 0.0, Errc::invalid_argument,
          "Fisher information components must be nonnegative");
  const double denom = info.observed + conversion * info.missing;
  require(denom > 0.0, Errc::undefined_fraction, "I_obs + c I_mis must be positive");
  return info.observed / denom;
}

std::vector<Theorem1Row> theorem1_check(const Theorem1Config& config,
                                        const std::vector<double>& deltas,
                                        const EvidenceFunction& v, const McOptions& mc) {
  require(!deltas.empty(), Errc::invalid_argument, "no deltas given");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    require(deltas[i] > 0.0, Errc::invalid_argument, "deltas must be positive");
    require(i == 0 || deltas[i] < deltas[i - 1], Errc::invalid_argument,
            "deltas must be strictly decreasing");
  }
  require(config.n_obs >= 1 && config.n_mis >= 0 && config.noise_variance > 0.0,
          Errc::invalid_argument, "invalid Normal-mean configuration");
  const double c = conversion_number(v);
  const FisherInfo info{config.n_obs / config.noise_variance,
                        config.n_mis / config.noise_variance, config.theta_obs};
  const double analytic = fisher_fraction(info, c);

  // Single covariate at t = 1 on the identity basis: x ~ N(theta, s2).
  const Design d_obs = Design::replicated({1.0}, config.n_obs, Basis::identity);
  const Design d_mis = config.n_mis > 0
                           ? Design::replicated({1.0}, config.n_mis, Basis::identity)
                           : Design::empty(Basis::identity);
  const Vector x_obs = Vector::Constant(config.n_obs, config.theta_obs);

  std::vector<Theorem1Row> rows;
  for (double delta : deltas) {
    TwoHypothesisProblem p;
    p.prior0 = v.prior0();
    p.prior1 = v.prior1();
    p.hyp0 = Hypothesis::linear_point(Vector::Constant(1, config.theta_obs + delta),
                                      config.noise_variance);
    p.hyp1 = Hypothesis::linear_point(Vector::Constant(1, config.theta_obs),
                                      config.noise_variance);
    auto f = fraction_observed(p, d_obs, x_obs, d_mis, v, EngineOptions{}, mc);
    Theorem1Row row;
    row.delta = delta;
    row.numeric = f.fraction;
    row.analytic = analytic;
    row.abs_error = std::abs(f.fraction - analytic);
    // Delta method on obs / (obs + cond) with only cond random.
    const double denom = f.observed + f.conditional;
    row.standard_error = denom > 0.0 ? f.observed * f.conditional_se / (denom * denom) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

namespace {

struct Piece {
  double f0;
  double f1;
};

AppendixBDesign evaluate_design(const Piece (&pieces)[3], double pi0, double pi1) {
  AppendixBDesign d;
  const auto ppr = EvidenceFunction::posterior_prior_ratio(pi0);
  double posterior_entropy = 0.0;
  double p_expect = 0.0;
  for (int k = 0; k < 3; ++k) {
    const auto [f0, f1] = pieces[k];
    const double m = pi0 * f0 + pi1 * f1;
    if (m <= 0.0) {
      d.posterior_h0[k] = pi0;
      continue;
    }
    const double post0 = pi0 * f0 / m;
    const double post1 = 1.0 - post0;
    d.posterior_h0[k] = post0;
    posterior_entropy += m * entropy(post0);
    if (f1 > 0.0) p_expect += f1 * (f0 > 0.0 ? ppr(f0 / f1) : 0.0);
    d.correct_h0 += f0 * (post0 > 0.5 ? 1.0 : 0.0);
    d.correct_h1 += f1 * (post1 > 0.5 ? 1.0 : 0.0);
    d.expected_true_h0 += f0 * post0;
    d.expected_true_h1 += f1 * post1;
  }
  d.box_hill = entropy(pi0) - posterior_entropy;
  d.p_criterion = ppr.baseline() - p_expect;
  return d;
}

}  // namespace

AppendixBResult appendix_b_example(double prior0, double prior1, double alpha,
                                   double beta1, double beta2) {
  auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };
  require(open_unit(prior0) && open_unit(prior1) && std::abs(prior0 + prior1 - 1.0) < 1e-12,
          Errc::invalid_argument, "prior probabilities must lie in (0,1) and sum to one");
  require(alpha > 0.0 && alpha <= 1.0 && open_unit(beta1) && open_unit(beta2),
          Errc::invalid_argument, "alpha must lie in (0,1] and beta1, beta2 in (0,1)");
  AppendixBResult r;
  r.prior0 = prior0;
  r.prior1 = prior1;
  r.alpha = alpha;
  r.beta1 = beta1;
  r.beta2 = beta2;
  // Unit-width pieces [0,1), [1,2), [3,4): densities equal piece masses.
  const Piece t1[3] = {{beta1, alpha * beta1},
                       {1.0 - beta1, alpha * (1.0 - beta1)},
                       {0.0, 1.0 - alpha}};
  const Piece t2[3] = {{beta1, beta2}, {1.0 - beta1, 1.0 - beta2}, {0.0, 0.0}};
  r.t1 = evaluate_design(t1, prior0, prior1);
  r.t2 = evaluate_design(t2, prior0, prior1);
  r.bh1 = r.t1.box_hill < r.t2.box_hill;
  r.bh2 = r.t1.correct_h0 >= r.t2.correct_h0 && r.t1.correct_h1 >= r.t2.correct_h1;
  r.bh3 = r.t1.expected_true_h0 > r.t2.expected_true_h0 &&
          r.t1.expected_true_h1 > r.t2.expected_true_h1;
  r.bh4 = r.t1.p_criterion > r.t2.p_criterion;
  r.bh5 = r.t1.correct_h0 > r.t2.correct_h0 || r.t1.correct_h1 > r.t2.correct_h1;
  return r;
}

}  // namespace tinfo
