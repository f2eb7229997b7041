#include "testinfo/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "testinfo/errors.hpp"

namespace tinfo {

namespace {

constexpr double kProbFloor = 1e-300;
constexpr double kProbCeil = 1.0 - 1e-16;
constexpr double kLinearPredictorClamp = 500.0;  // hard stop for separated fits
constexpr double kSeparationTolerance = 1e-10;

// Success and failure probabilities, each computed without cancellation.
struct Probabilities {
  double p;
  double q;
  double density;  // dF/du
};

Probabilities probabilities(Link link, double u) {
  Probabilities r{};
  if (link == Link::probit) {
    r.p = 0.5 * std::erfc(-u / std::numbers::sqrt2);
    r.q = 0.5 * std::erfc(u / std::numbers::sqrt2);
    r.density = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  } else {
    double eu = std::exp(u);
    r.p = -std::expm1(-eu);
    r.q = std::exp(-eu);
    r.density = eu * r.q;
  }
  r.p = std::max(r.p, kProbFloor);
  r.q = std::max(r.q, kProbFloor);
  return r;
}

Matrix covariance_root(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  Vector sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * sq.asDiagonal();
}

}  // namespace

std::string_view to_string(Basis basis) {
  switch (basis) {
    case Basis::intercept_slope: return "intercept-slope";
    case Basis::cubic: return "cubic";
    case Basis::identity: return "identity";
  }
  return "unknown";
}

Basis parse_basis(std::string_view name) {
  if (name == "intercept-slope") return Basis::intercept_slope;
  if (name == "cubic") return Basis::cubic;
  if (name == "identity") return Basis::identity;
  throw Error(Errc::invalid_argument, "unknown basis '" + std::string(name) + "'");
}

std::size_t basis_dimension(Basis basis) {
  switch (basis) {
    case Basis::intercept_slope: return 2;
    case Basis::cubic: return 4;
    case Basis::identity: return 1;
  }
  return 0;
}

Eigen::RowVectorXd basis_row(Basis basis, double t) {
  Eigen::RowVectorXd row(basis_dimension(basis));
  switch (basis) {
    case Basis::intercept_slope: row << 1.0, t; break;
    case Basis::cubic: row << 1.0, t, t * t, t * t * t; break;
    case Basis::identity: row << t; break;
  }
  return row;
}

Design::Design(std::vector<double> points, std::vector<int> replications,
               Basis basis, Box box)
    : points_(std::move(points)), reps_(std::move(replications)), basis_(basis), box_(box) {
  require(points_.size() == reps_.size(), Errc::dimension_mismatch,
          "design points and replications differ in length");
  require(box_.lo <= box_.hi, Errc::invalid_argument, "design box is inverted");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    require(box_.contains(points_[i]), Errc::domain,
            "design point " + std::to_string(points_[i]) + " lies outside the box");
    require(reps_[i] >= 1, Errc::invalid_argument, "replications must be positive");
    rows_ += static_cast<std::size_t>(reps_[i]);
  }
}

Design Design::replicated(std::vector<double> points, int replications,
                          Basis basis, Box box) {
  std::vector<int> reps(points.size(), replications);
  return Design(std::move(points), std::move(reps), basis, box);
}

Matrix Design::matrix() const {
  Matrix m(rows_, columns());
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    auto row = basis_row(basis_, points_[i]);
    for (int k = 0; k < reps_[i]; ++k) m.row(r++) = row;
  }
  return m;
}

Matrix Design::unique_matrix() const {
  Matrix m(points_.size(), columns());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = basis_row(basis_, points_[i]);
  }
  return m;
}

std::vector<std::size_t> Design::row_entries() const {
  std::vector<std::size_t> out;
  out.reserve(rows_);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    out.insert(out.end(), static_cast<std::size_t>(reps_[i]), i);
  }
  return out;
}

Design Design::with_point(std::size_t i, double t) const {
  require(i < points_.size(), Errc::invalid_argument, "design index out of range");
  auto pts = points_;
  pts[i] = t;
  return Design(std::move(pts), reps_, basis_, box_);
}

Design Design::concat(const Design& other) const {
  if (other.is_empty()) return *this;
  if (is_empty()) return other;
  require(basis_ == other.basis_, Errc::dimension_mismatch,
          "cannot concatenate designs with different bases");
  auto pts = points_;
  auto reps = reps_;
  pts.insert(pts.end(), other.points_.begin(), other.points_.end());
  reps.insert(reps.end(), other.reps_.begin(), other.reps_.end());
  Box box{std::min(box_.lo, other.box_.lo), std::max(box_.hi, other.box_.hi)};
  return Design(std::move(pts), std::move(reps), basis_, box);
}

std::string_view to_string(Link link) {
  return link == Link::probit ? "probit" : "cloglog";
}

Link parse_link(std::string_view name) {
  if (name == "probit") return Link::probit;
  if (name == "cloglog") return Link::cloglog;
  throw Error(Errc::invalid_argument, "unknown link '" + std::string(name) + "'");
}

Hypothesis Hypothesis::linear_point(Vector beta, double noise_variance) {
  Hypothesis h;
  h.family = Family::linear_gaussian;
  h.noise_variance = noise_variance;
  h.cov = Matrix::Zero(beta.size(), beta.size());
  h.mean = std::move(beta);
  h.estimated = false;
  h.validate();
  return h;
}

Hypothesis Hypothesis::linear_gaussian(Vector mean, Matrix cov_scale,
                                       double noise_variance) {
  Hypothesis h;
  h.family = Family::linear_gaussian;
  h.noise_variance = noise_variance;
  h.mean = std::move(mean);
  h.cov = noise_variance * cov_scale;
  h.estimated = true;
  h.validate();
  return h;
}

Hypothesis Hypothesis::binary(Link link, Vector mean, Matrix cov) {
  Hypothesis h;
  h.family = Family::binary;
  h.link = link;
  h.mean = std::move(mean);
  h.cov = std::move(cov);
  h.estimated = true;
  h.validate();
  return h;
}

Hypothesis Hypothesis::binary_point(Link link, Vector beta) {
  Hypothesis h = binary(link, beta, Matrix::Zero(beta.size(), beta.size()));
  h.estimated = false;
  return h;
}

bool Hypothesis::is_point() const { return cov.size() == 0 || cov.isZero(0.0); }

void Hypothesis::validate() const {
  require(cov.rows() == mean.size() && cov.cols() == mean.size(),
          Errc::dimension_mismatch, "prior covariance does not match the mean");
  require(noise_variance > 0.0, Errc::invalid_argument,
          "noise variance must be positive");
  if (cov.size() > 0) {
    require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()),
            Errc::invalid_argument, "prior covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -1e-12, Errc::invalid_argument,
            "prior covariance must be positive semidefinite");
  }
}

TwoHypothesisProblem TwoHypothesisProblem::swapped() const {
  return {prior1, prior0, hyp1, hyp0};
}

void TwoHypothesisProblem::validate() const {
  require(prior0 > 0.0 && prior0 < 1.0 && prior1 > 0.0 && prior1 < 1.0 &&
              std::abs(prior0 + prior1 - 1.0) < 1e-12,
          Errc::invalid_argument, "hypothesis prior probabilities must lie in (0,1) and sum to one");
  hyp0.validate();
  hyp1.validate();
  require(hyp0.family == hyp1.family, Errc::unsupported_model,
          "hypotheses must share an observation space");
}

TwoHypothesisProblem LinearGaussianModel::problem(double prior0) const {
  validate();
  TwoHypothesisProblem p{prior0, 1.0 - prior0,
                         Hypothesis::linear_point(null, noise_variance),
                         Hypothesis::linear_gaussian(alt_mean, alt_cov, noise_variance)};
  p.validate();
  return p;
}

void LinearGaussianModel::validate() const {
  auto d = static_cast<Eigen::Index>(design.columns());
  require(null.size() == d && alt_mean.size() == d && alt_cov.rows() == d &&
              alt_cov.cols() == d,
          Errc::dimension_mismatch, "coefficient dimensions disagree with the basis");
}

TwoHypothesisProblem link_discrimination_problem(Vector mean, Matrix cov,
                                                 double prior0) {
  TwoHypothesisProblem p{prior0, 1.0 - prior0,
                         Hypothesis::binary(Link::cloglog, mean, cov),
                         Hypothesis::binary(Link::probit, mean, cov)};
  p.validate();
  return p;
}

double link_inverse(Link link, double u) {
  double p = link == Link::probit ? 0.5 * std::erfc(-u / std::numbers::sqrt2)
                                  : -std::expm1(-std::exp(u));
  return std::clamp(p, kProbFloor, kProbCeil);
}

Vector draw_parameters(const Hypothesis& h, Stream& rng) {
  if (h.is_point()) return h.mean;
  Vector z(h.mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return h.mean + covariance_root(h.cov) * z;
}

Vector simulate(const Hypothesis& h, const Design& design, const Vector& params,
                Stream& rng) {
  require(params.size() == static_cast<Eigen::Index>(design.columns()),
          Errc::dimension_mismatch, "parameter dimension does not match the design");
  Vector x(design.rows());
  if (design.rows() == 0) return x;
  const Matrix xu = design.unique_matrix();
  const Vector mu = xu * params;
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < design.size(); ++i) {
    for (int k = 0; k < design.replications()[i]; ++k) {
      if (h.family == Family::linear_gaussian) {
        x[r++] = mu[static_cast<Eigen::Index>(i)] +
                 std::sqrt(h.noise_variance) * rng.normal();
      } else {
        double p = link_inverse(h.link, mu[static_cast<Eigen::Index>(i)]);
        x[r++] = rng.uniform() < p ? 1.0 : 0.0;
      }
    }
  }
  return x;
}

Vector simulate(const TwoHypothesisProblem& problem, const Design& design,
                Which which, const std::optional<Vector>& params, Stream& rng) {
  const Hypothesis& h = problem.hypothesis(which);
  Stream param_rng = rng.substream("parameters");
  Vector beta = params ? *params : draw_parameters(h, param_rng);
  Stream data_rng = rng.substream("data");
  return simulate(h, design, beta, data_rng);
}

namespace {

void aggregate(const Design& design, const Vector& data, Vector& trials,
               Vector& successes) {
  trials = Vector::Zero(design.size());
  successes = Vector::Zero(design.size());
  auto entries = design.row_entries();
  for (std::size_t r = 0; r < entries.size(); ++r) {
    double y = data[static_cast<Eigen::Index>(r)];
    require(y == 0.0 || y == 1.0, Errc::domain, "binary responses must be 0 or 1");
    trials[static_cast<Eigen::Index>(entries[r])] += 1.0;
    successes[static_cast<Eigen::Index>(entries[r])] += y;
  }
}

}  // namespace

double binomial_log_likelihood(Link link, const Matrix& x, const Vector& trials,
                               const Vector& successes, const Vector& beta) {
  const Vector u = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    auto pr = probabilities(link, u[i]);
    if (successes[i] > 0) ll += successes[i] * std::log(pr.p);
    if (trials[i] - successes[i] > 0) ll += (trials[i] - successes[i]) * std::log(pr.q);
  }
  return ll;
}

double log_likelihood(const Hypothesis& h, const Design& design,
                      const Vector& params, const Vector& data) {
  require(data.size() == static_cast<Eigen::Index>(design.rows()),
          Errc::dimension_mismatch, "data length does not match the design");
  require(params.size() == static_cast<Eigen::Index>(design.columns()),
          Errc::dimension_mismatch, "parameter dimension does not match the design");
  if (h.family == Family::linear_gaussian) {
    const double n = static_cast<double>(data.size());
    const Vector resid = data - design.matrix() * params;
    return -0.5 * n * std::log(2.0 * std::numbers::pi * h.noise_variance) -
           0.5 * resid.squaredNorm() / h.noise_variance;
  }
  Vector trials, successes;
  aggregate(design, data, trials, successes);
  return binomial_log_likelihood(h.link, design.unique_matrix(), trials, successes,
                                 params);
}

MleFit binomial_fit(Link link, const Matrix& x, const Vector& trials,
                    const Vector& successes) {
  const Eigen::Index d = x.cols();
  {
    // Rank is judged on entries that carry observations.
    Matrix used(x.rows(), d);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (trials[i] > 0) used.row(k++) = x.row(i);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(used.topRows(k));
    require(k >= d && qr.rank() == d, Errc::rank_deficient,
            "binary design is rank deficient");
  }

  MleFit fit;
  fit.params = Vector::Zero(d);
  double ll = binomial_log_likelihood(link, x, trials, successes, fit.params);
  fit.converged = false;
  for (int it = 0; it < 100; ++it) {
    fit.iterations = it + 1;
    const Vector u = x * fit.params;
    Vector grad = Vector::Zero(d);
    Matrix info = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (trials[i] <= 0) continue;
      auto pr = probabilities(link, u[i]);
      double score = pr.density * (successes[i] / pr.p - (trials[i] - successes[i]) / pr.q);
      double w = trials[i] * pr.density * pr.density / (pr.p * pr.q);
      grad += score * x.row(i).transpose();
      info += w * x.row(i).transpose() * x.row(i);
    }
    if (grad.norm() < 1e-8) {
      fit.converged = true;
      break;
    }
    Eigen::LDLT<Matrix> ldlt(info);
    Vector step = ldlt.solve(grad);
    if (!step.allFinite() || ldlt.info() != Eigen::Success) break;
    double scale = 1.0;
    bool improved = false;
    Vector prev = fit.params;
    const double prev_ll = ll;
    for (int h = 0; h < 40; ++h) {
      Vector cand = fit.params + scale * step;
      double cand_ll = binomial_log_likelihood(link, x, trials, successes, cand);
      if (cand_ll >= ll) {
        improved = cand_ll > ll || scale * step.norm() < 1e-14;
        fit.params = cand;
        ll = cand_ll;
        break;
      }
      scale *= 0.5;
    }
    if ((x * fit.params).cwiseAbs().maxCoeff() > kLinearPredictorClamp) {
      // Separation. Back off along the last step to the clamp boundary so
      // that coefficients not driving the separation keep their values.
      const Vector dir = fit.params - prev;
      double lo = 0.0, hi = 1.0;
      for (int b = 0; b < 60; ++b) {
        const double mid = 0.5 * (lo + hi);
        if ((x * (prev + mid * dir)).cwiseAbs().maxCoeff() > kLinearPredictorClamp) hi = mid;
        else lo = mid;
      }
      fit.params = prev + lo * dir;
      fit.converged = false;
      break;
    }
    // Under separation the likelihood creeps towards its supremum; stop once
    // the gain is negligible rather than at a fixed linear-predictor bound,
    // since the cloglog lower tail saturates far more slowly than the upper.
    if (!improved || ll - prev_ll < 1e-12) {
      fit.converged = grad.norm() < 1e-5 * std::max(1.0, trials.sum());
      break;
    }
  }
  const double umax = (x * fit.params).cwiseAbs().maxCoeff();
  if (umax > kLinearPredictorClamp) {
    // Separation: the likelihood keeps increasing along a ray.
    fit.params *= kLinearPredictorClamp / umax;
    fit.converged = false;
  }
  // A fitted probability pinned at 0 or 1 means the gradient vanished only
  // because the estimate ran off towards infinity.
  const Vector u = x * fit.params;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (trials[i] <= 0) continue;
    auto pr = probabilities(link, u[i]);
    if (std::min(pr.p, pr.q) < kSeparationTolerance) fit.converged = false;
  }
  return fit;
}

MleFit mle_fit(const Hypothesis& h, const Design& design, const Vector& data) {
  require(data.size() == static_cast<Eigen::Index>(design.rows()),
          Errc::dimension_mismatch, "data length does not match the design");
  if (h.family == Family::linear_gaussian) {
    const Matrix m = design.matrix();
    Eigen::ColPivHouseholderQR<Matrix> qr(m);
    require(m.rows() >= m.cols() && qr.rank() == m.cols(), Errc::rank_deficient,
            "design matrix is rank deficient");
    MleFit fit;
    fit.params = qr.solve(data);
    fit.iterations = 1;
    return fit;
  }
  Vector trials, successes;
  aggregate(design, data, trials, successes);
  return binomial_fit(h.link, design.unique_matrix(), trials, successes);
}

}  // namespace tinfo
