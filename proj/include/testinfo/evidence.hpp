#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tinfo {

enum class EvidenceKind { log, posterior_prior_ratio, symmetrized_kl, custom };

std::string_view to_string(EvidenceKind kind);

/// A concave evidence map V(z) applied to a Bayes factor z = BF(x|H0,H1).
///
/// Prior probabilities only matter for the posterior-prior-ratio kind; they
/// are carried for every kind so that `swapped()` is always meaningful.
/// Values are immutable after construction.
class EvidenceFunction {
 public:
  using Evaluator = std::function<double(double)>;

  static EvidenceFunction log();
  static EvidenceFunction posterior_prior_ratio(double prior0);
  static EvidenceFunction symmetrized_kl();
  static EvidenceFunction custom(std::string name, Evaluator fn);

  /// Named presets: "log", "posterior-prior-ratio" (prior0 applies),
  /// "symmetrized-kl", and the custom forms "neg-log-squared" (-(log z)^2)
  /// and "sqrt" (sqrt(z) - 1).
  static EvidenceFunction preset(std::string_view name, double prior0 = 0.5);

  EvidenceKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  double prior0() const noexcept { return prior0_; }
  double prior1() const noexcept { return 1.0 - prior0_; }

  /// V(z); throws Errc::domain for z <= 0.
  double operator()(double z) const;

  /// V(exp(log_z)) evaluated without forming z where the kind allows it.
  double at_log(double log_z) const;

  /// V(1), the no-evidence baseline.
  double baseline() const { return at_log(0.0); }

  /// The same evidence function with the hypothesis roles exchanged.
  EvidenceFunction swapped() const;

  /// First and second derivative at z = 1 (analytic for built-in kinds,
  /// central differences with h = 1e-5 for custom).
  double derivative1_at_one() const;
  double derivative2_at_one() const;

 private:
  EvidenceFunction(EvidenceKind kind, std::string name, double prior0,
                   std::shared_ptr<const Evaluator> fn);

  EvidenceKind kind_;
  std::string name_;
  double prior0_;
  std::shared_ptr<const Evaluator> fn_;
};

double eval(const EvidenceFunction& v, double z);

struct SymmetryReport {
  bool symmetric = true;
  double max_deviation = 0.0;
  /// Grid points where V(1/z; H1, H0) = 0, excluded from the ratio.
  std::vector<double> indeterminate;
};

SymmetryReport check_symmetry(const EvidenceFunction& v,
                              std::span<const double> grid,
                              double tolerance = 1e-9);

/// c = -V''(1) / V'(1). Throws Errc::degenerate_at_one when V'(1) = 0.
double conversion_number(const EvidenceFunction& v);

/// Midpoint-style concavity check over consecutive grid pairs and triples.
bool check_concavity(const EvidenceFunction& v, std::span<const double> grid,
                     double tolerance = 1e-9);

}  // namespace tinfo
