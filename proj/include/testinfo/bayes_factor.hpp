#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>

#include "testinfo/models.hpp"

namespace tinfo {

enum class Engine { exact, mc, laplace, mle };

std::string_view to_string(Engine engine);
/// Accepts `exact | mc | laplace | mle`.
Engine parse_engine(std::string_view name);

struct EngineOptions {
  Engine kind = Engine::exact;
  int draws = 1000;          // mc only
  std::uint64_t seed = 0;    // mc only
};

/// log BF(x | H0, H1) with a Monte Carlo standard error on the log scale.
struct BayesFactorResult {
  double log_bf = 0.0;
  double standard_error = 0.0;
  Engine engine = Engine::exact;
  int draws = 0;
  bool non_converged = false;  // mle: a fit failed to converge
  bool projected = false;      // laplace: Hessian projected to pd
};

/// Gaussian density with a cached Cholesky factor.
class GaussianDensity {
 public:
  GaussianDensity(Vector mean, const Matrix& cov);
  double log_pdf(const Vector& x) const;
  /// mean + L z with L the Cholesky factor and z standard normal from rng.
  Vector sample(Stream& rng) const;
  const Vector& mean() const noexcept { return mean_; }
  double log_det() const noexcept { return log_det_; }

 private:
  Vector mean_;
  Eigen::LLT<Matrix> llt_;
  double log_det_ = 0.0;
};

/// Marginal density of x = M beta + noise with beta ~ N(h.mean, h.cov).
GaussianDensity linear_marginal(const Hypothesis& h, const Matrix& m);

/// Exact Bayes factor for linear-Gaussian problems with both marginals
/// factorised once; reused across many datasets on the same design.
class LinearGaussianBayesFactor {
 public:
  LinearGaussianBayesFactor(const TwoHypothesisProblem& problem, const Design& design);
  double log_bf(const Vector& x) const { return m0_.log_pdf(x) - m1_.log_pdf(x); }

 private:
  GaussianDensity m0_;
  GaussianDensity m1_;
};

/// Conjugate update of a linear-Gaussian hypothesis on data (m, x). Works
/// for singular (including zero) prior covariance.
struct GaussianPosterior {
  Vector mean;
  Matrix cov;
};
GaussianPosterior gaussian_posterior(const Hypothesis& h, const Matrix& m,
                                     const Vector& x);

BayesFactorResult bf_linear_gaussian(const TwoHypothesisProblem& problem,
                                     const Design& design, const Vector& x);

/// Prior-draw averaging of the likelihood under each hypothesis, in
/// log-sum-exp form. Both hypotheses consume the same standard-normal
/// stream, so identical hypotheses give log BF = 0 exactly.
BayesFactorResult bf_monte_carlo(const TwoHypothesisProblem& problem,
                                 const Design& design, const Vector& x,
                                 int draws, std::uint64_t seed);

BayesFactorResult bf_laplace(const TwoHypothesisProblem& problem,
                             const Design& design, const Vector& x);

/// log f(x | fitted H0) - log f(x | fitted H1); point hypotheses stay fixed.
BayesFactorResult lr_mle_plugin(const TwoHypothesisProblem& problem,
                                const Design& design, const Vector& x);

BayesFactorResult bayes_factor(const TwoHypothesisProblem& problem,
                               const Design& design, const Vector& x,
                               const EngineOptions& engine);

struct LaplaceResult {
  double log_marginal = 0.0;
  Vector mode;
  Matrix neg_hessian;
  bool projected = false;
  int iterations = 0;
};

/// Laplace approximation of log integral exp(log_joint(theta)) d theta.
/// The mode is found by damped Newton steps on finite-difference
/// derivatives; the Hessian at the mode uses central differences.
LaplaceResult laplace_log_marginal(const std::function<double(const Vector&)>& log_joint,
                                   Vector start);

double log_sum_exp(std::span<const double> values);

}  // namespace tinfo
