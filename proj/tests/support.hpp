#pragma once

#include <cmath>
#include <vector>

#include "testinfo/models.hpp"

namespace tinfo::test {

// Random linear-Gaussian testing problem: point null against a Gaussian
// alternative, with a random basis, design and prior.
struct RandomLinear {
  TwoHypothesisProblem problem;
  Design design;
  Vector null;
  Vector alt_mean;
  Matrix cov_scale;
  double noise_variance = 1.0;
};

inline RandomLinear random_linear(std::uint64_t seed, double prior0 = 0.5) {
  Stream s(seed);
  static const Basis bases[] = {Basis::identity, Basis::intercept_slope, Basis::cubic};
  RandomLinear r;
  const Basis basis = bases[s.index(3)];
  const auto d = static_cast<Eigen::Index>(basis_dimension(basis));
  const std::size_t entries = 2 + s.index(5);
  std::vector<double> pts;
  std::vector<int> reps;
  for (std::size_t i = 0; i < entries; ++i) {
    pts.push_back(-1.0 + 2.0 * s.uniform());
    reps.push_back(1 + static_cast<int>(s.index(4)));
  }
  r.design = Design(pts, reps, basis);
  r.noise_variance = 0.5 + 1.5 * s.uniform();
  r.null = Vector(d);
  r.alt_mean = Vector(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    r.null[k] = 0.5 * s.normal();
    r.alt_mean[k] = r.null[k] + 0.4 * s.normal();
  }
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = 0.5 * s.normal();
  r.cov_scale = a * a.transpose() + 0.1 * Matrix::Identity(d, d);
  LinearGaussianModel model{r.design, r.noise_variance, r.null, r.alt_mean, r.cov_scale};
  r.problem = model.problem(prior0);
  return r;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace tinfo::test
