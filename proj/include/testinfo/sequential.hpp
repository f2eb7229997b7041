#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "testinfo/models.hpp"

namespace tinfo {

/// Posterior of the alternative's coefficients after the observed stage,
/// plus the observed log BF(x_obs | H0, H1).
struct PosteriorState {
  Vector mean;
  Matrix cov;
  double log_bf = 0.0;
};

/// Conjugate update of beta ~ N(eta, s2 R) on x = M beta + N(0, s2 I).
/// `null` is the point null used for the observed Bayes factor.
PosteriorState posterior_update(const Vector& eta, const Matrix& cov_scale, const Matrix& m,
                                const Vector& x, double noise_variance, const Vector& null);

/// Grid location of max |basis(t)'(mean - null)|; ties go to the smallest t.
double sep_max(const PosteriorState& state, const Vector& null, Basis basis, Box box = {},
               int resolution = 401);

/// (i) the spread {-1,-0.5,0,0.5,1}; (ii) sep + {-0.2,...,0.2}, shifted
/// just enough to stay inside the box.
std::array<Design, 2> build_constrained_menu(double sep, Basis basis = Basis::cubic,
                                             Box box = {});

/// Power of the size-`size` likelihood ratio test of beta = null with known
/// noise variance, at the true coefficient `beta`: a noncentral chi-square
/// tail with noncentrality (beta-null)'M'M(beta-null)/s2.
double lr_power(const Matrix& m, const Vector& beta, const Vector& null,
                double noise_variance, double size = 0.05);

enum class Procedure { P, TK, D };
enum class Scenario { parabola, random_curves };

std::string_view to_string(Procedure p);
std::string_view to_string(Scenario s);
Procedure parse_procedure(std::string_view name);
Scenario parse_scenario(std::string_view name);

struct SequentialStudyConfig {
  Scenario scenario = Scenario::parabola;
  int beta_draws = 20;
  int datasets_per_beta = 50;
  std::vector<double> observed_points{-1.0, -0.5, 0.0, 0.5, 1.0};
  int n_mis = 5;
  double cov_scale = 0.2;       // R = cov_scale * I
  double noise_variance = 1.0;
  double size = 0.05;
  int inner_draws = 500;        // conditional-P predictive draws per candidate
  int grid_points = 21;
  int restarts = 2;
  int max_passes = 10;

  void validate() const;
};

struct StudyRow {
  Procedure procedure = Procedure::TK;
  Scenario scenario = Scenario::parabola;
  bool constrained = false;
  double power = 0.0;
  double se = 0.0;
  /// Share of cells choosing menu design (i); NaN when unconstrained.
  double frac_design_i = 0.0;
  long cells = 0;
};

/// Two-stage cubic-regression study: per (beta draw, dataset) cell, update
/// the posterior, choose the follow-up design by each procedure, and score
/// the LR power of the combined design at the cell's true beta. `se` is
/// taken across beta draws.
std::vector<StudyRow> run_sequential_study(const SequentialStudyConfig& config,
                                           const std::vector<Procedure>& procedures,
                                           bool constrained, std::uint64_t seed);

/// CSV `procedure,scenario,constrained,power,se,frac_design_i`.
void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows);

}  // namespace tinfo
