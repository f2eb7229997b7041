#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "testinfo/rng.hpp"

namespace tinfo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Maps a scalar covariate t to a model row.
enum class Basis { intercept_slope, cubic, identity };

std::string_view to_string(Basis basis);
Basis parse_basis(std::string_view name);
std::size_t basis_dimension(Basis basis);
Eigen::RowVectorXd basis_row(Basis basis, double t);

struct Box {
  double lo = -1.0;
  double hi = 1.0;
  bool contains(double t) const { return t >= lo && t <= hi; }
};

/// Candidate points with a replication count each. Points may repeat.
class Design {
 public:
  Design() = default;
  Design(std::vector<double> points, std::vector<int> replications, Basis basis,
         Box box = {});

  static Design replicated(std::vector<double> points, int replications,
                           Basis basis, Box box = {});
  static Design empty(Basis basis, Box box = {}) { return Design({}, {}, basis, box); }

  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<int>& replications() const noexcept { return reps_; }
  Basis basis() const noexcept { return basis_; }
  Box box() const noexcept { return box_; }

  std::size_t size() const noexcept { return points_.size(); }
  bool is_empty() const noexcept { return points_.empty(); }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t columns() const { return basis_dimension(basis_); }

  /// Expanded design matrix with one row per replicate.
  Matrix matrix() const;
  /// Design matrix with one row per entry (no replication).
  Matrix unique_matrix() const;
  /// Entry index of every expanded row.
  std::vector<std::size_t> row_entries() const;

  Design with_point(std::size_t i, double t) const;
  Design concat(const Design& other) const;

 private:
  std::vector<double> points_;
  std::vector<int> reps_;
  Basis basis_ = Basis::intercept_slope;
  Box box_;
  std::size_t rows_ = 0;
};

enum class Family { linear_gaussian, binary };
enum class Link { probit, cloglog };

std::string_view to_string(Link link);
Link parse_link(std::string_view name);

/// Data model under one hypothesis: the family, its fixed constants, and a
/// Gaussian prior on the coefficients (zero covariance = point hypothesis).
struct Hypothesis {
  Family family = Family::linear_gaussian;
  Link link = Link::probit;
  double noise_variance = 1.0;
  Vector mean;
  Matrix cov;
  /// Coefficients are re-estimated by maximum likelihood in plug-in tests.
  bool estimated = false;

  static Hypothesis linear_point(Vector beta, double noise_variance);
  /// beta ~ N(mean, noise_variance * cov_scale).
  static Hypothesis linear_gaussian(Vector mean, Matrix cov_scale,
                                    double noise_variance);
  static Hypothesis binary(Link link, Vector mean, Matrix cov);
  static Hypothesis binary_point(Link link, Vector beta);

  bool is_point() const;
  std::size_t dimension() const { return static_cast<std::size_t>(mean.size()); }
  void validate() const;
};

enum class Which { h0, h1 };

/// Two hypotheses sharing an observation space, with prior probabilities.
struct TwoHypothesisProblem {
  double prior0 = 0.5;
  double prior1 = 0.5;
  Hypothesis hyp0;
  Hypothesis hyp1;

  const Hypothesis& hypothesis(Which w) const { return w == Which::h0 ? hyp0 : hyp1; }
  TwoHypothesisProblem swapped() const;
  void validate() const;
};

/// Normal linear regression: H0 beta = null vs H1 beta ~ N(alt_mean, s2 alt_cov).
struct LinearGaussianModel {
  Design design;
  double noise_variance = 1.0;
  Vector null;
  Vector alt_mean;
  Matrix alt_cov;

  TwoHypothesisProblem problem(double prior0 = 0.5) const;
  void validate() const;
};

/// Binary regression with a Gaussian coefficient prior.
struct BinaryRegressionModel {
  Design design;
  Link link = Link::probit;
  Vector coef_mean;
  Matrix coef_cov;

  Hypothesis hypothesis() const { return Hypothesis::binary(link, coef_mean, coef_cov); }
};

/// H0: cloglog link vs H1: probit link, both with beta ~ N(mean, cov).
TwoHypothesisProblem link_discrimination_problem(Vector mean, Matrix cov,
                                                 double prior0 = 0.5);

/// Inverse link clamped to [1e-300, 1 - 1e-16].
double link_inverse(Link link, double u);

Vector draw_parameters(const Hypothesis& h, Stream& rng);

Vector simulate(const Hypothesis& h, const Design& design, const Vector& params,
                Stream& rng);
Vector simulate(const TwoHypothesisProblem& problem, const Design& design,
                Which which, const std::optional<Vector>& params, Stream& rng);

double log_likelihood(const Hypothesis& h, const Design& design,
                      const Vector& params, const Vector& data);

struct MleFit {
  Vector params;
  bool converged = true;
  int iterations = 0;
};

/// Least squares for Gaussian data, Newton/Fisher scoring for binary data.
MleFit mle_fit(const Hypothesis& h, const Design& design, const Vector& data);

/// Binary fit from aggregated counts per design entry.
MleFit binomial_fit(Link link, const Matrix& x, const Vector& trials,
                    const Vector& successes);
double binomial_log_likelihood(Link link, const Matrix& x, const Vector& trials,
                               const Vector& successes, const Vector& beta);

}  // namespace tinfo
