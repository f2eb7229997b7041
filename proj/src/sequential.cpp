#include "testinfo/sequential.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "testinfo/bayes_factor.hpp"
#include "testinfo/criteria.hpp"
#include "testinfo/errors.hpp"
#include "testinfo/evidence.hpp"
#include "testinfo/optimizer.hpp"

namespace tinfo {

PosteriorState posterior_update(const Vector& eta, const Matrix& cov_scale, const Matrix& m,
                                const Vector& x, double noise_variance, const Vector& null) {
  const Eigen::Index d = eta.size();
  require(cov_scale.rows() == d && cov_scale.cols() == d && null.size() == d &&
              (m.rows() == 0 || m.cols() == d) && m.rows() == x.size(),
          Errc::dimension_mismatch, "posterior update shapes disagree");
  require(noise_variance > 0.0, Errc::invalid_argument, "noise variance must be positive");
  Eigen::LLT<Matrix> r_llt(cov_scale);
  require(r_llt.info() == Eigen::Success, Errc::singular_matrix,
          "prior covariance scale R must be positive definite");
  const Matrix r_inv = r_llt.solve(Matrix::Identity(d, d));
  PosteriorState s;
  if (m.rows() == 0) {
    s.mean = eta;
    s.cov = noise_variance * cov_scale;
    return s;
  }
  Matrix prec = m.transpose() * m + r_inv;
  prec = 0.5 * (prec + prec.transpose());
  Eigen::LLT<Matrix> llt(prec);
  require(llt.info() == Eigen::Success, Errc::singular_matrix, "posterior precision is singular");
  s.cov = noise_variance * llt.solve(Matrix::Identity(d, d));
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  s.mean = llt.solve(m.transpose() * x + r_inv * eta);

  TwoHypothesisProblem p{0.5, 0.5, Hypothesis::linear_point(null, noise_variance),
                         Hypothesis::linear_gaussian(eta, cov_scale, noise_variance)};
  s.log_bf = linear_marginal(p.hyp0, m).log_pdf(x) - linear_marginal(p.hyp1, m).log_pdf(x);
  return s;
}

double sep_max(const PosteriorState& state, const Vector& null, Basis basis, Box box,
               int resolution) {
  require(resolution >= 101, Errc::invalid_argument, "sep_max grid needs >= 101 points");
  require(state.mean.size() == null.size() &&
              null.size() == static_cast<Eigen::Index>(basis_dimension(basis)),
          Errc::dimension_mismatch, "separation vector does not match the basis");
  const Vector diff = state.mean - null;
  double best_t = box.lo;
  double best = -1.0;
  for (int i = 0; i < resolution; ++i) {
    const double t =
        i == resolution - 1 ? box.hi : box.lo + (box.hi - box.lo) * i / (resolution - 1);
    const double v = std::abs(basis_row(basis, t).dot(diff));
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  return best_t;
}

std::array<Design, 2> build_constrained_menu(double sep, Basis basis, Box box) {
  require(box.contains(sep), Errc::invalid_argument, "separation location outside the box");
  const double half = 0.2;
  double shift = 0.0;
  if (sep - half < box.lo) shift = box.lo - (sep - half);
  if (sep + half > box.hi) shift = box.hi - (sep + half);
  std::vector<double> narrow;
  for (int k = -2; k <= 2; ++k) {
    narrow.push_back(std::clamp(sep + shift + 0.1 * k, box.lo, box.hi));
  }
  return {Design::replicated({-1.0, -0.5, 0.0, 0.5, 1.0}, 1, basis, box),
          Design::replicated(std::move(narrow), 1, basis, box)};
}

double lr_power(const Matrix& m, const Vector& beta, const Vector& null, double noise_variance,
                double size) {
  require(size > 0.0 && size < 1.0, Errc::invalid_argument, "test size must lie in (0,1)");
  require(m.cols() == beta.size() && beta.size() == null.size(), Errc::dimension_mismatch,
          "power arguments have inconsistent shapes");
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  require(qr.rank() == m.cols(), Errc::rank_deficient, "combined design is rank deficient");
  const double df = static_cast<double>(m.cols());
  const double crit = boost::math::quantile(boost::math::chi_squared(df), 1.0 - size);
  const double lambda = (m * (beta - null)).squaredNorm() / noise_variance;
  if (lambda <= 0.0) return size;
  return boost::math::cdf(
      boost::math::complement(boost::math::non_central_chi_squared(df, lambda), crit));
}

std::string_view to_string(Procedure p) {
  switch (p) {
    case Procedure::P: return "P";
    case Procedure::TK: return "TK";
    case Procedure::D: return "D";
  }
  return "unknown";
}

std::string_view to_string(Scenario s) {
  return s == Scenario::parabola ? "parabola" : "random-curves";
}

Procedure parse_procedure(std::string_view name) {
  if (name == "P") return Procedure::P;
  if (name == "TK") return Procedure::TK;
  if (name == "D") return Procedure::D;
  throw Error(Errc::invalid_argument, "unknown procedure '" + std::string(name) + "'");
}

Scenario parse_scenario(std::string_view name) {
  if (name == "parabola" || name == "a") return Scenario::parabola;
  if (name == "random-curves" || name == "b") return Scenario::random_curves;
  throw Error(Errc::invalid_argument, "unknown scenario '" + std::string(name) + "'");
}

void SequentialStudyConfig::validate() const {
  require(beta_draws >= 1 && datasets_per_beta >= 1 && n_mis >= 1 && inner_draws >= 1 &&
              grid_points >= 2 && restarts >= 1 && max_passes >= 1,
          Errc::invalid_argument, "study counts must be positive");
  require(!observed_points.empty(), Errc::invalid_argument, "no observed design points");
  require(cov_scale > 0.0 && noise_variance > 0.0, Errc::invalid_argument,
          "variances must be positive");
  require(size > 0.0 && size < 1.0, Errc::invalid_argument, "test size must lie in (0,1)");
}

namespace {

struct CellChoice {
  Design design;
  bool chose_spread = false;
};

}  // namespace

std::vector<StudyRow> run_sequential_study(const SequentialStudyConfig& config,
                                           const std::vector<Procedure>& procedures,
                                           bool constrained, std::uint64_t seed) {
  config.validate();
  require(!procedures.empty(), Errc::invalid_argument, "no procedures requested");
  constexpr Eigen::Index d = 4;
  const Basis basis = Basis::cubic;
  const Matrix r = config.cov_scale * Matrix::Identity(d, d);
  const Matrix r_root = std::sqrt(config.noise_variance * config.cov_scale) * Matrix::Identity(d, d);
  const Design d_obs = Design::replicated(config.observed_points, 1, basis);
  const Matrix m_obs = d_obs.matrix();
  const auto grid = CandidateGrid::uniform(config.grid_points, basis);
  const auto ppr = EvidenceFunction::posterior_prior_ratio(0.5);
  const std::size_t np = procedures.size();

  std::vector<std::vector<double>> per_beta(np);
  std::vector<long> spread_count(np, 0);
  long cells = 0;
  const Stream root(seed);

  for (int j = 0; j < config.beta_draws; ++j) {
    const Stream sj = root.substream(static_cast<std::uint64_t>(j));
    Vector null = Vector::Zero(d), eta(d);
    if (config.scenario == Scenario::parabola) {
      eta << 1.1, 0.0, -1.3, 0.0;
    } else {
      Stream ns = sj.substream("null");
      null << -1.0 + 2.0 * ns.uniform(), -1.0 + 2.0 * ns.uniform(),
          -10.0 + 20.0 * ns.uniform(), -10.0 + 20.0 * ns.uniform();
      eta = null;
    }
    Stream bs = sj.substream("beta");
    Vector z(d);
    for (Eigen::Index k = 0; k < d; ++k) z[k] = bs.normal();
    const Vector beta = eta + r_root * z;

    const TwoHypothesisProblem problem{
        0.5, 0.5, Hypothesis::linear_point(null, config.noise_variance),
        Hypothesis::linear_gaussian(eta, r, config.noise_variance)};

    std::vector<double> sums(np, 0.0);
    for (int k = 0; k < config.datasets_per_beta; ++k) {
      const Stream sk = sj.substream("dataset").substream(static_cast<std::uint64_t>(k));
      Stream ds = sk.substream("data");
      const Vector x_obs = simulate(problem.hyp1, d_obs, beta, ds);
      const auto post = posterior_update(eta, r, m_obs, x_obs, config.noise_variance, null);
      const std::uint64_t cell_seed = mix64(sk.seed());

      for (std::size_t pi = 0; pi < np; ++pi) {
        DesignCriterion crit;
        switch (procedures[pi]) {
          case Procedure::TK:
            crit = [&](const Design& dm, std::uint64_t) {
              return tk_closed_form(dm.matrix(), null, post.mean,
                                    post.cov / config.noise_variance, config.noise_variance);
            };
            break;
          case Procedure::D:
            crit = [&](const Design& dm, std::uint64_t) {
              return d_conditional(dm.matrix(), post.cov);
            };
            break;
          case Procedure::P:
            crit = [&](const Design& dm, std::uint64_t s) {
              return conditional_test_info(problem, d_obs, x_obs, dm, ppr, {}, Order::h0_h1,
                                           {config.inner_draws, s, false});
            };
            break;
        }
        CellChoice choice;
        if (constrained) {
          const double sep = sep_max(post, null, basis);
          const auto menu = build_constrained_menu(sep, basis);
          auto res = constrained_select(crit, {menu[0], menu[1]}, cell_seed);
          choice.design = res.design;
          choice.chose_spread = res.selected == 0;
        } else {
          auto res = exchange_optimize(
              crit, grid, {config.n_mis, config.max_passes, config.restarts, cell_seed});
          if (res.aborted) throw Error(Errc::aborted_estimate, res.error);
          choice.design = res.design;
        }
        Matrix m_all(m_obs.rows() + static_cast<Eigen::Index>(choice.design.rows()), d);
        m_all << m_obs, choice.design.matrix();
        sums[pi] += lr_power(m_all, beta, null, config.noise_variance, config.size);
        if (choice.chose_spread) ++spread_count[pi];
      }
      ++cells;
    }
    for (std::size_t pi = 0; pi < np; ++pi) {
      per_beta[pi].push_back(sums[pi] / config.datasets_per_beta);
    }
  }

  std::vector<StudyRow> rows;
  for (std::size_t pi = 0; pi < np; ++pi) {
    const auto& v = per_beta[pi];
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    StudyRow row;
    row.procedure = procedures[pi];
    row.scenario = config.scenario;
    row.constrained = constrained;
    row.power = mean;
    row.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    row.frac_design_i = constrained ? static_cast<double>(spread_count[pi]) / cells
                                    : std::numeric_limits<double>::quiet_NaN();
    row.cells = cells;
    rows.push_back(row);
  }
  return rows;
}

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
  out << "procedure,scenario,constrained,power,se,frac_design_i\n";
  const auto prec = out.precision(10);
  for (const auto& r : rows) {
    out << to_string(r.procedure) << ',' << to_string(r.scenario) << ','
        << (r.constrained ? "true" : "false") << ',' << r.power << ',' << r.se << ',';
    if (!std::isnan(r.frac_design_i)) out << r.frac_design_i;
    out << '\n';
  }
  out.precision(prec);
}

}  // namespace tinfo
