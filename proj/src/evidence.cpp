#include "testinfo/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "testinfo/errors.hpp"

namespace tinfo {

std::string_view to_string(EvidenceKind kind) {
  switch (kind) {
    case EvidenceKind::log: return "log";
    case EvidenceKind::posterior_prior_ratio: return "posterior-prior-ratio";
    case EvidenceKind::symmetrized_kl: return "symmetrized-kl";
    case EvidenceKind::custom: return "custom";
  }
  return "unknown";
}

EvidenceFunction::EvidenceFunction(EvidenceKind kind, std::string name,
                                   double prior0,
                                   std::shared_ptr<const Evaluator> fn)
    : kind_(kind), name_(std::move(name)), prior0_(prior0), fn_(std::move(fn)) {
  require(prior0 > 0.0 && prior0 < 1.0, Errc::invalid_argument,
          "evidence function prior0 must lie in (0,1)");
}

EvidenceFunction EvidenceFunction::log() {
  return {EvidenceKind::log, "log", 0.5, nullptr};
}

EvidenceFunction EvidenceFunction::posterior_prior_ratio(double prior0) {
  return {EvidenceKind::posterior_prior_ratio, "posterior-prior-ratio", prior0,
          nullptr};
}

EvidenceFunction EvidenceFunction::symmetrized_kl() {
  return {EvidenceKind::symmetrized_kl, "symmetrized-kl", 0.5, nullptr};
}

EvidenceFunction EvidenceFunction::custom(std::string name, Evaluator fn) {
  require(static_cast<bool>(fn), Errc::invalid_argument,
          "custom evidence function needs an evaluator");
  return {EvidenceKind::custom, std::move(name), 0.5,
          std::make_shared<const Evaluator>(std::move(fn))};
}

EvidenceFunction EvidenceFunction::preset(std::string_view name, double prior0) {
  if (name == "log") return log();
  if (name == "posterior-prior-ratio" || name == "P") {
    return posterior_prior_ratio(prior0);
  }
  if (name == "symmetrized-kl") return symmetrized_kl();
  if (name == "neg-log-squared") {
    return custom("neg-log-squared", [](double z) {
      double l = std::log(z);
      return -l * l;
    });
  }
  if (name == "sqrt") {
    return custom("sqrt", [](double z) { return std::sqrt(z) - 1.0; });
  }
  throw Error(Errc::invalid_argument,
              "unknown evidence preset '" + std::string(name) + "'");
}

double EvidenceFunction::operator()(double z) const {
  require(z > 0.0, Errc::domain, "evidence function argument must be positive");
  if (kind_ == EvidenceKind::custom) return (*fn_)(z);
  return at_log(std::log(z));
}

double EvidenceFunction::at_log(double log_z) const {
  switch (kind_) {
    case EvidenceKind::log:
      return log_z;
    case EvidenceKind::posterior_prior_ratio:
      // z / (pi1 + pi0 z) = 1 / (pi0 + pi1 / z)
      return 1.0 / (prior0_ + prior1() * std::exp(-log_z));
    case EvidenceKind::symmetrized_kl:
      if (log_z == 0.0) return 0.0;
      return -0.5 * log_z * std::expm1(log_z);
    case EvidenceKind::custom:
      return (*fn_)(std::exp(log_z));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

EvidenceFunction EvidenceFunction::swapped() const {
  EvidenceFunction out(*this);
  out.prior0_ = prior1();
  return out;
}

double EvidenceFunction::derivative1_at_one() const {
  switch (kind_) {
    case EvidenceKind::log: return 1.0;
    case EvidenceKind::posterior_prior_ratio: return prior1();
    case EvidenceKind::symmetrized_kl: return 0.0;
    case EvidenceKind::custom: {
      constexpr double h = 1e-5;
      return ((*fn_)(1.0 + h) - (*fn_)(1.0 - h)) / (2.0 * h);
    }
  }
  return 0.0;
}

double EvidenceFunction::derivative2_at_one() const {
  switch (kind_) {
    case EvidenceKind::log: return -1.0;
    case EvidenceKind::posterior_prior_ratio: return -2.0 * prior0_ * prior1();
    // V(z) = (log z - z log z) / 2: V'' = -1/(2z^2) - 1/(2z)
    case EvidenceKind::symmetrized_kl: return -1.0;
    case EvidenceKind::custom: {
      constexpr double h = 1e-5;
      return ((*fn_)(1.0 + h) - 2.0 * (*fn_)(1.0) + (*fn_)(1.0 - h)) / (h * h);
    }
  }
  return 0.0;
}

double eval(const EvidenceFunction& v, double z) { return v(z); }

SymmetryReport check_symmetry(const EvidenceFunction& v,
                              std::span<const double> grid, double tolerance) {
  require(!grid.empty(), Errc::invalid_argument, "symmetry grid is empty");
  const EvidenceFunction dual = v.swapped();
  SymmetryReport report;
  for (double z : grid) {
    require(z > 0.0, Errc::domain, "symmetry grid entries must be positive");
    double denom = dual(1.0 / z);
    if (denom == 0.0) {
      report.indeterminate.push_back(z);
      continue;
    }
    double dev = std::abs(v(z) / denom - z);
    report.max_deviation = std::max(report.max_deviation, dev);
    if (!(dev <= tolerance * std::max(1.0, z))) report.symmetric = false;
  }
  return report;
}

double conversion_number(const EvidenceFunction& v) {
  double d1 = v.derivative1_at_one();
  double scale = std::max(1.0, std::abs(v.derivative2_at_one()));
  if (std::abs(d1) <= 1e-8 * scale) {
    throw Error(Errc::degenerate_at_one,
                "evidence function '" + v.name() +
                    "' has V'(1) = 0; conversion number undefined");
  }
  return -v.derivative2_at_one() / d1;
}

bool check_concavity(const EvidenceFunction& v, std::span<const double> grid,
                     double tolerance) {
  require(grid.size() >= 3, Errc::invalid_argument,
          "concavity grid needs at least three points");
  require(std::is_sorted(grid.begin(), grid.end()), Errc::invalid_argument,
          "concavity grid must be sorted ascending");
  constexpr double lambdas[] = {0.25, 0.5, 0.75};
  auto holds = [&](double a, double b) {
    for (double lam : lambdas) {
      double lhs = v(lam * a + (1.0 - lam) * b);
      double rhs = lam * v(a) + (1.0 - lam) * v(b);
      if (lhs < rhs - tolerance * std::max(1.0, std::abs(rhs))) return false;
    }
    return true;
  };
  for (std::size_t i = 0; i + 2 < grid.size(); ++i) {
    if (!holds(grid[i], grid[i + 1]) || !holds(grid[i + 1], grid[i + 2]) ||
        !holds(grid[i], grid[i + 2])) {
      return false;
    }
  }
  return true;
}

}  // namespace tinfo
