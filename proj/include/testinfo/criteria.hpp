#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "testinfo/bayes_factor.hpp"
#include "testinfo/evidence.hpp"
#include "testinfo/models.hpp"

namespace tinfo {

/// Which hypothesis plays the null: (H0,H1) is the primary ordering,
/// (H1,H0) the dual with roles swapped throughout.
enum class Order { h0_h1, h1_h0 };

struct McOptions {
  int draws = 10000;
  std::uint64_t seed = 0;
  /// Pair every draw with its mirrored (antithetic) partner.
  bool antithetic = false;
};

/// A criterion value. `standard_error` is zero for deterministic criteria.
struct CriterionEstimate {
  std::string criterion;
  double value = 0.0;
  double standard_error = 0.0;
  long draws = 0;
  std::uint64_t seed = 0;
};

/// Tag used for expected/conditional values under an evidence function:
/// "TK" for log, "P" for posterior-prior-ratio, otherwise the kind name.
std::string criterion_tag(const EvidenceFunction& v);

/// V(1) - E[V(BF(X|H0,H1)) | H1] by simulation.
CriterionEstimate expected_test_info(const TwoHypothesisProblem& problem,
                                     const Design& design, const EvidenceFunction& v,
                                     const EngineOptions& engine, Order order,
                                     const McOptions& mc);

/// KL divergence between the linear-Gaussian marginals under H1 and H0,
/// with H1 prior covariance noise_variance * cov_scale.
CriterionEstimate tk_closed_form(const Matrix& m, const Vector& null,
                                 const Vector& alt_mean, const Matrix& cov_scale,
                                 double noise_variance);

double observed_test_info(const TwoHypothesisProblem& problem, const Design& design,
                          const Vector& x, const EvidenceFunction& v,
                          const EngineOptions& engine, Order order);

/// W(x1) - E[W(x1, X2) | H1, x1], W = V o BF, with X2 drawn from the
/// posterior predictive of the alternative given x1.
CriterionEstimate conditional_test_info(const TwoHypothesisProblem& problem,
                                        const Design& design1, const Vector& x1,
                                        const Design& design2,
                                        const EvidenceFunction& v,
                                        const EngineOptions& engine, Order order,
                                        const McOptions& mc);

/// E[W(X1)|H1] - E[W(X1,X2)|H1], from shared complete-data draws.
CriterionEstimate expected_conditional_test_info(const TwoHypothesisProblem& problem,
                                                 const Design& design1,
                                                 const Design& design2,
                                                 const EvidenceFunction& v,
                                                 const EngineOptions& engine,
                                                 Order order, const McOptions& mc);

/// log BF_obs + TK(m_mis; null, post_mean, post_cov, 1).
CriterionEstimate conditional_tk(const Matrix& m_mis, const Vector& null,
                                 const Vector& post_mean, const Matrix& post_cov,
                                 double log_bf_obs);

/// -log|s2 (M'M + R^-1)^-1|. Larger is better.
CriterionEstimate d_criterion(const Matrix& m, const Matrix& cov_scale, double noise_variance);

/// log|V_obs| + log|M_mis'M_mis + V_obs^-1|. Larger is better.
CriterionEstimate d_conditional(const Matrix& m_mis, const Matrix& post_cov);

/// Prior entropy of the hypothesis indicator minus its expected posterior
/// entropy under the prior mixture of the two marginals.
CriterionEstimate box_hill(const TwoHypothesisProblem& problem, const Design& design,
                           const EngineOptions& engine, const McOptions& mc);

struct PowerOptions {
  double size = 0.05;
  int outer_draws = 200;
  int calibration_draws = 2000;
  /// Datasets simulated under H1 per outer draw; 0 means calibration_draws.
  int power_draws = 0;
  std::uint64_t seed = 0;
};

/// Prior mean power of the plug-in likelihood ratio test. Each outer draw
/// calibrates the critical value empirically under H0 at its own nuisance
/// draw, then counts rejections under H1.
CriterionEstimate prior_mean_power(const TwoHypothesisProblem& problem,
                                   const Design& design, const PowerOptions& options);

struct FractionResult {
  double fraction = 0.0;
  Order order = Order::h0_h1;
  double observed = 0.0;
  double conditional = 0.0;
  double conditional_se = 0.0;
  bool clamped = false;
};

/// Observed over observed-plus-conditional information, using the
/// ordering (H0,H1) when BF(x1) <= 1 and (H1,H0) otherwise.
FractionResult fraction_observed(const TwoHypothesisProblem& problem,
                                 const Design& design1, const Vector& x1,
                                 const Design& design2, const EvidenceFunction& v,
                                 const EngineOptions& engine, const McOptions& mc);

/// log LR(theta_obs, theta0 | x_obs) over its expectation once the missing
/// part is simulated at theta_obs.
double ri1(const Hypothesis& model, const Design& design_obs, const Vector& x_obs,
           const Design& design_mis, const Vector& theta0, const McOptions& mc);

struct FisherInfo {
  double observed = 0.0;
  double missing = 0.0;
  double at_parameter = 0.0;
};

/// I_obs / (I_obs + c I_mis).
double fisher_fraction(const FisherInfo& info, double conversion);

struct Theorem1Row {
  double delta = 0.0;
  double numeric = 0.0;
  double analytic = 0.0;
  double abs_error = 0.0;
  double standard_error = 0.0;
};

struct Theorem1Config {
  double theta_obs = 0.0;
  int n_obs = 5;
  int n_mis = 5;
  double noise_variance = 1.0;
};

/// Normal mean with known variance: numeric fraction of observed test
/// information at theta0 = theta_obs + delta against the Fisher limit.
std::vector<Theorem1Row> theorem1_check(const Theorem1Config& config,
                                        const std::vector<double>& deltas,
                                        const EvidenceFunction& v, const McOptions& mc);

/// Per (design, truth) quantities for the two-design entropy example.
struct AppendixBDesign {
  double box_hill = 0.0;
  double p_criterion = 0.0;
  double correct_h0 = 0.0;   // P(P(H0|X) > 0.5 | H0)
  double correct_h1 = 0.0;   // P(P(H1|X) > 0.5 | H1)
  double expected_true_h0 = 0.0;  // E[P(H0|X) | H0]
  double expected_true_h1 = 0.0;  // E[P(H1|X) | H1]
  double posterior_h0[3] = {0.0, 0.0, 0.0};  // on [0,1), [1,2), [3,4)
};

struct AppendixBResult {
  double prior0 = 0.0, prior1 = 0.0, alpha = 0.0, beta1 = 0.0, beta2 = 0.0;
  AppendixBDesign t1;
  AppendixBDesign t2;
  bool bh1 = false;  // box_hill(t1) < box_hill(t2)
  bool bh2 = false;  // correct(t1) >= correct(t2) for both truths
  bool bh3 = false;  // expected true posterior larger under t1, both truths
  bool bh4 = false;  // p_criterion(t1) > p_criterion(t2)
  bool bh5 = false;  // correct(t1) > correct(t2) for some truth
};

AppendixBResult appendix_b_example(double prior0, double prior1, double alpha,
                                   double beta1, double beta2);

}  // namespace tinfo
