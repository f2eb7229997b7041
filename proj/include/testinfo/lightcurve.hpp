#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "testinfo/bayes_factor.hpp"
#include "testinfo/models.hpp"

namespace tinfo::lc {

constexpr int kBins = 10;

/// Class template on a phase grid in [0,1), evaluated by periodic linear
/// interpolation.
class Template {
 public:
  Template() = default;
  Template(std::vector<double> phases, std::vector<double> mags);

  double operator()(double phase) const;
  const std::vector<double>& phases() const noexcept { return phases_; }
  const std::vector<double>& mags() const noexcept { return mags_; }
  /// Half the peak-to-peak range.
  double amplitude() const;

 private:
  std::vector<double> phases_;
  std::vector<double> mags_;
};

/// Sawtooth-like (class 0, RRab-like) and near-sinusoid (class 1, RRc-like),
/// both mean zero with unit amplitude.
std::pair<Template, Template> synth_templates();

/// CSV `phase,mag`; rejects malformed rows, phases outside [0,1) and
/// unsorted grids.
Template load_template(const std::string& path);
std::pair<Template, Template> load_templates(const std::string& path0,
                                             const std::string& path1);
void write_template(std::ostream& out, const Template& tpl);

double fold_phase(double time, double period);

/// Bin index of a phase: bin b covers [b/10, (b+1)/10).
int phase_bin(double phase);

/// Fixed per-class parameters: mean alpha + scale * template, bin nuggets
/// tau^2 (variances).
struct ClassParams {
  double alpha = 0.0;
  double scale = 1.0;
  std::array<double, kBins> nugget{};
};

struct LightcurveData {
  std::vector<double> phases;
  std::vector<double> mags;
  std::array<ClassParams, 2> params;

  std::size_t size() const noexcept { return phases.size(); }
  void validate() const;
};

struct GPHyper {
  double amplitude = 0.1;
  double lengthscale = 0.1;
};

/// Least-squares alignment against the template, then binned residual
/// variances. Empty bins take the pooled residual variance; every nugget is
/// floored at `floor`.
ClassParams fit_class_params(const std::vector<double>& phases, const std::vector<double>& mags,
                             const Template& tpl, double floor = 1e-4);

/// Fits both classes' parameters and returns the data record.
LightcurveData make_lightcurve(std::vector<double> phases, std::vector<double> mags,
                               const std::pair<Template, Template>& templates);

/// Squared-exponential GP over raw phase differences plus bin nuggets.
Matrix gp_covariance(const std::vector<double>& phases, const ClassParams& p, const GPHyper& h);

double gp_log_marginal(const LightcurveData& data, const Template& tpl, const GPHyper& hyper,
                       int cls);

/// Independent log-normal priors on amplitude and lengthscale.
struct HyperPrior {
  double amplitude_median = 0.1;
  double lengthscale_median = 0.1;
  double log_sd = 1.0;

  /// Medians 0.1 * template amplitude and 0.1.
  static HyperPrior for_template(const Template& tpl);
};

struct ClassFit {
  double log_marginal = 0.0;
  GPHyper mode;
  bool projected = false;
};

/// Laplace approximation of the class marginal over log hyperparameters.
ClassFit class_laplace(const LightcurveData& data, const Template& tpl, const HyperPrior& prior,
                       int cls);

struct ClassBayesFactor {
  BayesFactorResult bf;
  std::array<ClassFit, 2> fits;  // laplace only
};

/// log BF(x | class 0, class 1) with `engine` laplace or mc.
ClassBayesFactor class_bf(const LightcurveData& data, const std::pair<Template, Template>& tpl,
                          const std::array<HyperPrior, 2>& priors, const EngineOptions& engine);

/// P(class 0 | x) under equal class priors.
double posterior_class0(double log_bf);

enum class Method { oracle, testinfo, boxhill, random };
std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// One-point follow-up predictive under each class, with the
/// hyperparameters fixed at their Laplace modes.
class FollowupModel {
 public:
  FollowupModel(const LightcurveData& data, const std::pair<Template, Template>& tpl,
                const ClassBayesFactor& fitted);

  /// Predictive mean and variance of a new magnitude at `phase` under `cls`.
  std::pair<double, double> predictive(int cls, double phase) const;
  double log_bf() const noexcept { return log_bf_; }

 private:
  struct State {
    ClassParams params;
    GPHyper hyper;
    Eigen::LLT<Matrix> llt;
    Vector alpha;  // (K + D)^-1 (x - mean)
  };
  std::vector<double> phases_;
  std::array<Template, 2> tpl_;
  std::array<State, 2> state_;
  double log_bf_ = 0.0;
};

struct ScheduleDecision {
  int chosen = 0;
  double phase = 0.0;
  std::vector<double> values;  // per candidate; empty for random
};

/// `order_swapped` evaluates the test-information criterion with the
/// class roles exchanged (class 1 as null).
ScheduleDecision schedule_followup(const FollowupModel& model,
                                   const std::vector<double>& candidates, Method method,
                                   int true_class, int inner_draws, std::uint64_t seed,
                                   bool order_swapped = false);

/// Convenience overload fitting the classes by Laplace first.
ScheduleDecision schedule_followup(const LightcurveData& data,
                                   const std::pair<Template, Template>& tpl,
                                   const std::array<HyperPrior, 2>& priors,
                                   const std::vector<double>& candidates, Method method,
                                   int true_class, int inner_draws, std::uint64_t seed);

struct Star {
  int true_class = 0;
  ClassParams truth;  // generating alignment and nuggets
  GPHyper hyper;      // generating GP hyperparameters
  LightcurveData data;
};

struct PopulationConfig {
  int min_obs = 20;
  int max_obs = 60;
  double noise_sd_lo = 0.5;   // per-star observation noise sd range
  double noise_sd_hi = 1.0;
  double scale_lo = 0.8;
  double scale_hi = 1.2;
  double offset_sd = 0.5;
};

/// Half class 0, half class 1; phases uniform; GP + binned noise at the
/// star's generating parameters; class parameters then fitted from data.
std::vector<Star> synth_population(int n_stars, const std::pair<Template, Template>& tpl,
                                   const PopulationConfig& config, std::uint64_t seed);

struct ExperimentConfig {
  int n_stars = 60;
  int n_stages = 30;
  int candidates_per_stage = 3;
  int inner_draws = 2000;
  std::vector<Method> methods{Method::oracle, Method::testinfo, Method::boxhill, Method::random};
  PopulationConfig population;
};

struct StageCount {
  int stage = 0;
  Method method = Method::oracle;
  int correct = 0;
};

struct ExperimentResult {
  int n_stars = 0;
  int tracked = 0;                 // initially misclassified stars
  std::vector<StageCount> counts;  // stage-major, methods in config order
  long testinfo_calls = 0;
  long testinfo_oracle_matches = 0;  // testinfo choice equals the oracle's on the same state

  int final_count(Method m) const;
  /// Correct classifications summed over stages 1..n_stages.
  long cumulative_count(Method m) const;
  double match_rate() const;
};

ExperimentResult run_followup_experiment(const ExperimentConfig& config,
                                         const std::pair<Template, Template>& tpl,
                                         std::uint64_t seed);

/// CSV `stage,method,correct_count`.
void write_experiment_csv(std::ostream& out, const ExperimentResult& result);

}  // namespace tinfo::lc
