#include "testinfo/bayes_factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "testinfo/errors.hpp"

namespace tinfo {

std::string_view to_string(Engine engine) {
  switch (engine) {
    case Engine::exact: return "exact";
    case Engine::mc: return "mc";
    case Engine::laplace: return "laplace";
    case Engine::mle: return "mle";
  }
  return "unknown";
}

Engine parse_engine(std::string_view name) {
  if (name == "exact") return Engine::exact;
  if (name == "mc") return Engine::mc;
  if (name == "laplace") return Engine::laplace;
  if (name == "mle") return Engine::mle;
  throw Error(Errc::invalid_argument, "unknown engine '" + std::string(name) + "'");
}

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

GaussianDensity::GaussianDensity(Vector mean, const Matrix& cov)
    : mean_(std::move(mean)), llt_(cov) {
  require(cov.rows() == mean_.size() && cov.cols() == mean_.size(),
          Errc::dimension_mismatch, "covariance does not match the mean");
  require(llt_.info() == Eigen::Success, Errc::factorization,
          "covariance is not positive definite");
  log_det_ = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double GaussianDensity::log_pdf(const Vector& x) const {
  require(x.size() == mean_.size(), Errc::dimension_mismatch,
          "data length does not match the density");
  const Vector w = llt_.matrixL().solve(x - mean_);
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det_ + w.squaredNorm());
}

Vector GaussianDensity::sample(Stream& rng) const {
  Vector z(mean_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean_ + llt_.matrixL() * z;
}

GaussianDensity linear_marginal(const Hypothesis& h, const Matrix& m) {
  require(h.family == Family::linear_gaussian, Errc::unsupported_model,
          "exact marginal requires a linear-Gaussian hypothesis");
  require(m.cols() == h.mean.size(), Errc::dimension_mismatch,
          "design columns do not match the coefficient dimension");
  Matrix cov = h.noise_variance * Matrix::Identity(m.rows(), m.rows());
  if (!h.is_point()) cov += m * h.cov * m.transpose();
  return GaussianDensity(m * h.mean, cov);
}

LinearGaussianBayesFactor::LinearGaussianBayesFactor(const TwoHypothesisProblem& problem,
                                                     const Design& design)
    : m0_(linear_marginal(problem.hyp0, design.matrix())),
      m1_(linear_marginal(problem.hyp1, design.matrix())) {}

GaussianPosterior gaussian_posterior(const Hypothesis& h, const Matrix& m,
                                     const Vector& x) {
  require(m.rows() == x.size() && m.cols() == h.mean.size(),
          Errc::dimension_mismatch, "posterior update shapes disagree");
  if (h.is_point() || m.rows() == 0) return {h.mean, h.cov};
  const Matrix sm = h.cov * m.transpose();
  Matrix s = m * sm;
  s.diagonal().array() += h.noise_variance;
  const Eigen::LLT<Matrix> llt(s);
  const Matrix gain = llt.solve(sm.transpose()).transpose();
  GaussianPosterior post;
  post.mean = h.mean + gain * (x - m * h.mean);
  post.cov = h.cov - gain * sm.transpose();
  post.cov = 0.5 * (post.cov + post.cov.transpose());
  return post;
}

BayesFactorResult bf_linear_gaussian(const TwoHypothesisProblem& problem,
                                     const Design& design, const Vector& x) {
  BayesFactorResult r;
  r.engine = Engine::exact;
  r.log_bf = LinearGaussianBayesFactor(problem, design).log_bf(x);
  return r;
}

namespace {

struct MarginalEstimate {
  double log_mean = 0.0;
  double variance = 0.0;  // delta-method variance of log_mean
};

MarginalEstimate mc_marginal(const Hypothesis& h, const Design& design,
                             const Vector& x, int draws, Stream rng) {
  if (h.is_point()) return {log_likelihood(h, design, h.mean, x), 0.0};
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.cov);
  const Matrix root = es.eigenvectors() *
                      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::vector<double> ll(static_cast<std::size_t>(draws));
  Vector z(h.mean.size());
  for (int i = 0; i < draws; ++i) {
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    ll[static_cast<std::size_t>(i)] = log_likelihood(h, design, h.mean + root * z, x);
  }
  const double lse = log_sum_exp(ll);
  if (!std::isfinite(lse)) {
    throw Error(Errc::degenerate_estimate,
                "all Monte Carlo likelihood draws underflowed");
  }
  const double n = static_cast<double>(draws);
  const double log_mean = lse - std::log(n);
  // Normalised weights w_i = L_i / mean(L); their variance gives var(log mean).
  double sum_sq = 0.0;
  for (double l : ll) {
    double w = std::exp(l - log_mean);
    sum_sq += (w - 1.0) * (w - 1.0);
  }
  const double var_w = sum_sq / std::max(1.0, n - 1.0);
  return {log_mean, var_w / n};
}

}  // namespace

BayesFactorResult bf_monte_carlo(const TwoHypothesisProblem& problem,
                                 const Design& design, const Vector& x, int draws,
                                 std::uint64_t seed) {
  require(draws >= 100, Errc::invalid_argument, "Monte Carlo Bayes factor needs >= 100 draws");
  const Stream shared = Stream(seed).substream("prior-draws");
  auto m0 = mc_marginal(problem.hyp0, design, x, draws, shared);
  auto m1 = mc_marginal(problem.hyp1, design, x, draws, shared);
  BayesFactorResult r;
  r.engine = Engine::mc;
  r.draws = draws;
  r.log_bf = m0.log_mean - m1.log_mean;
  r.standard_error = std::sqrt(m0.variance + m1.variance);
  return r;
}

LaplaceResult laplace_log_marginal(const std::function<double(const Vector&)>& log_joint,
                                   Vector start) {
  const Eigen::Index d = start.size();
  auto step_size = [](double v) { return 1e-3 * std::max(1.0, std::abs(v)); };
  auto gradient = [&](const Vector& th) {
    Vector g(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double h = step_size(th[i]);
      Vector a = th, b = th;
      a[i] += h;
      b[i] -= h;
      g[i] = (log_joint(a) - log_joint(b)) / (2.0 * h);
    }
    return g;
  };
  auto neg_hessian = [&](const Vector& th) {
    Matrix hm(d, d);
    const double f0 = log_joint(th);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double hi = step_size(th[i]);
      Vector a = th, b = th;
      a[i] += hi;
      b[i] -= hi;
      hm(i, i) = -(log_joint(a) - 2.0 * f0 + log_joint(b)) / (hi * hi);
      for (Eigen::Index j = 0; j < i; ++j) {
        const double hj = step_size(th[j]);
        Vector pp = th, pm = th, mp = th, mm = th;
        pp[i] += hi; pp[j] += hj;
        pm[i] += hi; pm[j] -= hj;
        mp[i] -= hi; mp[j] += hj;
        mm[i] -= hi; mm[j] -= hj;
        hm(i, j) = hm(j, i) =
            -(log_joint(pp) - log_joint(pm) - log_joint(mp) + log_joint(mm)) / (4.0 * hi * hj);
      }
    }
    return hm;
  };
  auto project = [](const Matrix& hm, bool& projected) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hm);
    Vector ev = es.eigenvalues();
    if (ev.minCoeff() >= 1e-8) return hm;
    projected = true;
    ev = ev.cwiseMax(1e-8);
    return Matrix(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
  };

  LaplaceResult r;
  Vector theta = std::move(start);
  double f = log_joint(theta);
  require(std::isfinite(f), Errc::degenerate_estimate,
          "log joint density is not finite at the starting point");
  for (int it = 0; it < 100; ++it) {
    r.iterations = it + 1;
    const Vector g = gradient(theta);
    bool ignored = false;
    const Matrix hm = project(neg_hessian(theta), ignored);
    const Vector step = hm.ldlt().solve(g);
    if (g.dot(step) < 1e-12) break;
    double scale = 1.0;
    bool moved = false;
    for (int k = 0; k < 30; ++k) {
      Vector cand = theta + scale * step;
      double fc = log_joint(cand);
      if (std::isfinite(fc) && fc >= f) {
        theta = std::move(cand);
        f = fc;
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved) break;
  }
  r.mode = theta;
  r.neg_hessian = project(neg_hessian(theta), r.projected);
  Eigen::LLT<Matrix> llt(r.neg_hessian);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  r.log_marginal = f + 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) -
                   0.5 * log_det;
  return r;
}

namespace {

struct LaplaceMarginal {
  double log_marginal;
  bool projected;
};

LaplaceMarginal laplace_hypothesis(const Hypothesis& h, const Design& design,
                                   const Vector& x) {
  if (h.is_point()) return {log_likelihood(h, design, h.mean, x), false};
  const GaussianDensity prior(h.mean, h.cov);
  auto log_joint = [&](const Vector& beta) {
    return prior.log_pdf(beta) + log_likelihood(h, design, beta, x);
  };
  auto r = laplace_log_marginal(log_joint, h.mean);
  return {r.log_marginal, r.projected};
}

}  // namespace

BayesFactorResult bf_laplace(const TwoHypothesisProblem& problem,
                             const Design& design, const Vector& x) {
  auto m0 = laplace_hypothesis(problem.hyp0, design, x);
  auto m1 = laplace_hypothesis(problem.hyp1, design, x);
  BayesFactorResult r;
  r.engine = Engine::laplace;
  r.log_bf = m0.log_marginal - m1.log_marginal;
  r.projected = m0.projected || m1.projected;
  return r;
}

BayesFactorResult lr_mle_plugin(const TwoHypothesisProblem& problem,
                                const Design& design, const Vector& x) {
  BayesFactorResult r;
  r.engine = Engine::mle;
  auto fitted = [&](const Hypothesis& h) {
    if (!h.estimated) return log_likelihood(h, design, h.mean, x);
    auto fit = mle_fit(h, design, x);
    r.non_converged = r.non_converged || !fit.converged;
    return log_likelihood(h, design, fit.params, x);
  };
  const double l0 = fitted(problem.hyp0);
  const double l1 = fitted(problem.hyp1);
  r.log_bf = l0 - l1;
  return r;
}

BayesFactorResult bayes_factor(const TwoHypothesisProblem& problem,
                               const Design& design, const Vector& x,
                               const EngineOptions& engine) {
  switch (engine.kind) {
    case Engine::exact:
      if (problem.hyp0.is_point() && problem.hyp1.is_point() &&
          (problem.hyp0.family != Family::linear_gaussian ||
           problem.hyp1.family != Family::linear_gaussian)) {
        BayesFactorResult r;
        r.log_bf = log_likelihood(problem.hyp0, design, problem.hyp0.mean, x) -
                   log_likelihood(problem.hyp1, design, problem.hyp1.mean, x);
        return r;
      }
      return bf_linear_gaussian(problem, design, x);
    case Engine::mc: return bf_monte_carlo(problem, design, x, engine.draws, engine.seed);
    case Engine::laplace: return bf_laplace(problem, design, x);
    case Engine::mle: return lr_mle_plugin(problem, design, x);
  }
  throw Error(Errc::invalid_argument, "unknown engine");
}

}  // namespace tinfo
