#include "testinfo/lightcurve.hpp"

#include <boost/math/distributions/normal.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "testinfo/errors.hpp"

namespace tinfo::lc {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kJitter = 1e-8;

double normal_log_pdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

double entropy2(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

double softplus(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

// logistic(u) - logistic(v) without cancellation when both are near 0 or 1
double sigmoid_diff(double u, double v) {
  if (u == v) return 0.0;
  const double hi = std::max(u, v), gap = std::abs(u - v);
  const double mag = std::exp(hi + std::log(-std::expm1(-gap)) - softplus(u) - softplus(v));
  return u > v ? mag : -mag;
}

const Template& pick(const std::pair<Template, Template>& tpl, int cls) {
  return cls == 0 ? tpl.first : tpl.second;
}

// Cholesky with a single jitter retry.
Eigen::LLT<Matrix> factor(Matrix k) {
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() == Eigen::Success) return llt;
  k.diagonal().array() += kJitter;
  llt.compute(k);
  require(llt.info() == Eigen::Success, Errc::factorization,
          "GP covariance is not positive definite even after jitter");
  return llt;
}

Vector mean_vector(const std::vector<double>& phases, const Template& tpl, const ClassParams& p) {
  Vector m(static_cast<Eigen::Index>(phases.size()));
  for (std::size_t i = 0; i < phases.size(); ++i) m[i] = p.alpha + p.scale * tpl(phases[i]);
  return m;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double kernel(double a, double b, const GPHyper& h) {
  const double d = a - b;
  return h.amplitude * h.amplitude * std::exp(-d * d / (2.0 * h.lengthscale * h.lengthscale));
}

double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    throw Error(Errc::parse, "line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Template::Template(std::vector<double> phases, std::vector<double> mags)
    : phases_(std::move(phases)), mags_(std::move(mags)) {
  require(!phases_.empty() && phases_.size() == mags_.size(), Errc::invalid_argument,
          "template needs equally many phases and magnitudes");
  for (std::size_t i = 0; i < phases_.size(); ++i) {
    require(phases_[i] >= 0.0 && phases_[i] < 1.0, Errc::invalid_argument,
            "template phases must lie in [0,1)");
    require(std::isfinite(mags_[i]), Errc::invalid_argument, "template magnitude not finite");
    if (i > 0) {
      require(phases_[i] > phases_[i - 1], Errc::invalid_argument,
              "template phases must be strictly increasing");
      require(phases_[i] - phases_[i - 1] <= 0.02 + 1e-12, Errc::invalid_argument,
              "template grid spacing exceeds 0.02");
    }
  }
  require(phases_.front() + 1.0 - phases_.back() <= 0.02 + 1e-12, Errc::invalid_argument,
          "template grid spacing exceeds 0.02 across the wrap");
}

double Template::operator()(double phase) const {
  double t = phase - std::floor(phase);
  if (t >= 1.0) t = 0.0;
  const auto it = std::upper_bound(phases_.begin(), phases_.end(), t);
  double p0, p1, m0, m1;
  if (it == phases_.begin()) {
    p0 = phases_.back() - 1.0;
    m0 = mags_.back();
    p1 = phases_.front();
    m1 = mags_.front();
  } else if (it == phases_.end()) {
    p0 = phases_.back();
    m0 = mags_.back();
    p1 = phases_.front() + 1.0;
    m1 = mags_.front();
  } else {
    const auto j = static_cast<std::size_t>(it - phases_.begin());
    p0 = phases_[j - 1];
    m0 = mags_[j - 1];
    p1 = phases_[j];
    m1 = mags_[j];
  }
  const double w = (t - p0) / (p1 - p0);
  return m0 + w * (m1 - m0);
}

double Template::amplitude() const {
  const auto [lo, hi] = std::minmax_element(mags_.begin(), mags_.end());
  return 0.5 * (*hi - *lo);
}

std::pair<Template, Template> synth_templates() {
  constexpr int n = 200;
  std::vector<double> ph(n), a(n), b(n);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / n;
    ph[i] = t;
    // fast rise over the first 15% of the cycle, slow linear decline
    a[i] = t < 0.15 ? t / 0.15 : (1.0 - t) / 0.85;
    b[i] = std::sin(2.0 * std::numbers::pi * t) + 0.15 * std::sin(4.0 * std::numbers::pi * t + 0.5);
  }
  auto normalise = [](std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double half = 0.5 * (*hi - *lo);
    for (double& x : v) x = (x - mean) / half;
  };
  normalise(a);
  normalise(b);
  return {Template(ph, a), Template(ph, std::move(b))};
}

Template load_template(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::parse, "cannot open template file " + path);
  std::vector<double> ph, mg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("phase", 0) == 0) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos && line.find(',', comma + 1) == std::string::npos,
            Errc::parse, path + ": line " + std::to_string(lineno) + " is not 'phase,mag'");
    const double p = parse_double(std::string_view(line).substr(0, comma), lineno);
    const double m = parse_double(std::string_view(line).substr(comma + 1), lineno);
    require(p >= 0.0 && p < 1.0, Errc::parse,
            path + ": line " + std::to_string(lineno) + " phase outside [0,1)");
    require(ph.empty() || p > ph.back(), Errc::parse,
            path + ": line " + std::to_string(lineno) + " phases not increasing");
    ph.push_back(p);
    mg.push_back(m);
  }
  require(!ph.empty(), Errc::parse, path + ": no template rows");
  try {
    return Template(std::move(ph), std::move(mg));
  } catch (const Error& e) {
    throw Error(Errc::parse, path + ": " + e.what());
  }
}

std::pair<Template, Template> load_templates(const std::string& path0, const std::string& path1) {
  return {load_template(path0), load_template(path1)};
}

void write_template(std::ostream& out, const Template& tpl) {
  out << "phase,mag\n";
  char buf[64];
  for (std::size_t i = 0; i < tpl.phases().size(); ++i) {
    auto r1 = std::to_chars(buf, buf + sizeof buf, tpl.phases()[i]);
    out.write(buf, r1.ptr - buf);
    out << ',';
    auto r2 = std::to_chars(buf, buf + sizeof buf, tpl.mags()[i]);
    out.write(buf, r2.ptr - buf);
    out << '\n';
  }
}

double fold_phase(double time, double period) {
  require(period > 0.0, Errc::invalid_argument, "period must be positive");
  double r = std::fmod(time, period);
  if (r < 0.0) r += period;
  const double ph = r / period;
  return ph >= 1.0 ? 0.0 : ph;
}

int phase_bin(double phase) {
  return std::clamp(static_cast<int>(std::floor(phase * kBins)), 0, kBins - 1);
}

void LightcurveData::validate() const {
  require(phases.size() == mags.size(), Errc::dimension_mismatch,
          "lightcurve phases and magnitudes differ in length");
  for (double p : phases) {
    require(p >= 0.0 && p < 1.0, Errc::invalid_argument, "lightcurve phase outside [0,1)");
  }
  for (const auto& cp : params) {
    for (double t : cp.nugget) {
      require(t > 0.0, Errc::invalid_argument, "nugget variances must be positive");
    }
  }
}

ClassParams fit_class_params(const std::vector<double>& phases, const std::vector<double>& mags,
                             const Template& tpl, double floor) {
  require(phases.size() == mags.size() && !phases.empty(), Errc::invalid_argument,
          "alignment fit needs matching, non-empty phases and magnitudes");
  const auto n = static_cast<double>(phases.size());
  double mu_bar = 0.0, x_bar = 0.0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    mu_bar += tpl(phases[i]);
    x_bar += mags[i];
  }
  mu_bar /= n;
  x_bar /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double u = tpl(phases[i]) - mu_bar;
    sxx += u * u;
    sxy += u * (mags[i] - x_bar);
  }
  ClassParams p;
  p.scale = sxx > 1e-12 ? sxy / sxx : 0.0;
  p.alpha = x_bar - p.scale * mu_bar;

  std::array<double, kBins> ss{};
  std::array<int, kBins> count{};
  double pooled = 0.0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double r = mags[i] - p.alpha - p.scale * tpl(phases[i]);
    const int b = phase_bin(phases[i]);
    ss[b] += r * r;
    ++count[b];
    pooled += r * r;
  }
  pooled /= n;
  for (int b = 0; b < kBins; ++b) {
    const double v = count[b] >= 2 ? ss[b] / count[b] : pooled;
    p.nugget[b] = std::max(v, floor);
  }
  return p;
}

LightcurveData make_lightcurve(std::vector<double> phases, std::vector<double> mags,
                               const std::pair<Template, Template>& templates) {
  LightcurveData d;
  d.params[0] = fit_class_params(phases, mags, templates.first);
  d.params[1] = fit_class_params(phases, mags, templates.second);
  d.phases = std::move(phases);
  d.mags = std::move(mags);
  d.validate();
  return d;
}

Matrix gp_covariance(const std::vector<double>& phases, const ClassParams& p, const GPHyper& h) {
  const auto n = static_cast<Eigen::Index>(phases.size());
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = h.amplitude * h.amplitude + p.nugget[phase_bin(phases[i])];
    for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i) = kernel(phases[i], phases[j], h);
  }
  return k;
}

double gp_log_marginal(const LightcurveData& data, const Template& tpl, const GPHyper& hyper,
                       int cls) {
  require(cls == 0 || cls == 1, Errc::invalid_argument, "class must be 0 or 1");
  require(hyper.amplitude > 0.0 && hyper.lengthscale > 0.0, Errc::invalid_argument,
          "GP hyperparameters must be positive");
  require(data.phases.size() == data.mags.size(), Errc::dimension_mismatch,
          "lightcurve phases and magnitudes differ in length");
  if (data.phases.empty()) return 0.0;
  const ClassParams& p = data.params[static_cast<std::size_t>(cls)];
  const auto llt = factor(gp_covariance(data.phases, p, hyper));
  const Vector r = to_vector(data.mags) - mean_vector(data.phases, tpl, p);
  const Vector w = llt.matrixL().solve(r);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (w.squaredNorm() + log_det + static_cast<double>(r.size()) * kLog2Pi);
}

HyperPrior HyperPrior::for_template(const Template& tpl) {
  HyperPrior p;
  p.amplitude_median = 0.1 * tpl.amplitude();
  p.lengthscale_median = 0.1;
  return p;
}

ClassFit class_laplace(const LightcurveData& data, const Template& tpl, const HyperPrior& prior,
                       int cls) {
  require(prior.amplitude_median > 0.0 && prior.lengthscale_median > 0.0 && prior.log_sd > 0.0,
          Errc::invalid_argument, "hyperparameter prior must have positive medians and spread");
  const double mu_a = std::log(prior.amplitude_median);
  const double mu_l = std::log(prior.lengthscale_median);
  const double sd = prior.log_sd;
  auto log_joint = [&](const Vector& th) {
    const double za = (th[0] - mu_a) / sd, zl = (th[1] - mu_l) / sd;
    const double lp = -0.5 * (za * za + zl * zl) - kLog2Pi - 2.0 * std::log(sd);
    // Far tails: the likelihood is held flat so the prior pulls Newton back.
    const double a = std::clamp(th[0], mu_a - 8.0 * sd, mu_a + 8.0 * sd);
    const double l = std::clamp(th[1], mu_l - 8.0 * sd, mu_l + 8.0 * sd);
    return lp + gp_log_marginal(data, tpl, {std::exp(a), std::exp(l)}, cls);
  };
  Vector start(2);
  start << mu_a, mu_l;
  const auto r = laplace_log_marginal(log_joint, start);
  return {r.log_marginal, {std::exp(r.mode[0]), std::exp(r.mode[1])}, r.projected};
}

ClassBayesFactor class_bf(const LightcurveData& data, const std::pair<Template, Template>& tpl,
                          const std::array<HyperPrior, 2>& priors, const EngineOptions& engine) {
  data.validate();
  ClassBayesFactor out;
  out.bf.engine = engine.kind;
  if (engine.kind == Engine::laplace) {
    out.fits[0] = class_laplace(data, tpl.first, priors[0], 0);
    out.fits[1] = class_laplace(data, tpl.second, priors[1], 1);
    out.bf.log_bf = out.fits[0].log_marginal - out.fits[1].log_marginal;
    out.bf.projected = out.fits[0].projected || out.fits[1].projected;
    return out;
  }
  require(engine.kind == Engine::mc, Errc::invalid_argument,
          "lightcurve Bayes factors use the laplace or mc engine");
  require(engine.draws >= 2, Errc::invalid_argument, "mc engine needs at least 2 draws");
  const Stream root(engine.seed);
  std::array<std::vector<double>, 2> ll;
  for (int i = 0; i < engine.draws; ++i) {
    Stream s = root.substream(static_cast<std::uint64_t>(i));
    const double za = s.normal(), zl = s.normal();
    for (int c = 0; c < 2; ++c) {
      const HyperPrior& p = priors[static_cast<std::size_t>(c)];
      const GPHyper h{p.amplitude_median * std::exp(p.log_sd * za),
                      p.lengthscale_median * std::exp(p.log_sd * zl)};
      ll[static_cast<std::size_t>(c)].push_back(gp_log_marginal(data, pick(tpl, c), h, c));
    }
  }
  double lm[2], se2 = 0.0;
  for (int c = 0; c < 2; ++c) {
    const auto& v = ll[static_cast<std::size_t>(c)];
    const double lse = log_sum_exp(v);
    const double n = static_cast<double>(v.size());
    lm[c] = lse - std::log(n);
    // delta-method se of the log of a mean of weights
    double m2 = 0.0;
    for (double x : v) m2 += std::exp(2.0 * (x - lm[c]));
    const double var = std::max(m2 / n - 1.0, 0.0);
    se2 += var / n;
  }
  out.bf.log_bf = lm[0] - lm[1];
  out.bf.standard_error = std::sqrt(se2);
  out.bf.draws = engine.draws;
  return out;
}

double posterior_class0(double log_bf) {
  return log_bf >= 0.0 ? 1.0 / (1.0 + std::exp(-log_bf))
                       : std::exp(log_bf) / (1.0 + std::exp(log_bf));
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::oracle: return "oracle";
    case Method::testinfo: return "testinfo";
    case Method::boxhill: return "boxhill";
    case Method::random: return "random";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "oracle") return Method::oracle;
  if (name == "testinfo") return Method::testinfo;
  if (name == "boxhill") return Method::boxhill;
  if (name == "random") return Method::random;
  throw Error(Errc::invalid_argument, "unknown scheduling method '" + std::string(name) + "'");
}

FollowupModel::FollowupModel(const LightcurveData& data, const std::pair<Template, Template>& tpl,
                             const ClassBayesFactor& fitted)
    : phases_(data.phases), tpl_{tpl.first, tpl.second}, log_bf_(fitted.bf.log_bf) {
  require(fitted.bf.engine == Engine::laplace, Errc::invalid_argument,
          "follow-up predictive needs Laplace hyperparameter modes");
  for (int c = 0; c < 2; ++c) {
    State& st = state_[static_cast<std::size_t>(c)];
    st.params = data.params[static_cast<std::size_t>(c)];
    st.hyper = fitted.fits[static_cast<std::size_t>(c)].mode;
    if (phases_.empty()) continue;
    st.llt = factor(gp_covariance(phases_, st.params, st.hyper));
    st.alpha = st.llt.solve(to_vector(data.mags) -
                            mean_vector(phases_, tpl_[static_cast<std::size_t>(c)], st.params));
  }
}

std::pair<double, double> FollowupModel::predictive(int cls, double phase) const {
  const State& st = state_[static_cast<std::size_t>(cls)];
  double mean = st.params.alpha + st.params.scale * tpl_[static_cast<std::size_t>(cls)](phase);
  double var = st.hyper.amplitude * st.hyper.amplitude + st.params.nugget[phase_bin(phase)];
  if (!phases_.empty()) {
    Vector k(static_cast<Eigen::Index>(phases_.size()));
    for (std::size_t i = 0; i < phases_.size(); ++i) k[i] = kernel(phase, phases_[i], st.hyper);
    mean += k.dot(st.alpha);
    var -= st.llt.matrixL().solve(k).squaredNorm();
  }
  return {mean, std::max(var, 1e-12)};
}

ScheduleDecision schedule_followup(const FollowupModel& model,
                                   const std::vector<double>& candidates, Method method,
                                   int true_class, int inner_draws, std::uint64_t seed,
                                   bool order_swapped) {
  require(!candidates.empty(), Errc::invalid_argument, "no candidate phases");
  for (double t : candidates) {
    require(t >= 0.0 && t < 1.0, Errc::invalid_argument, "candidate phase outside [0,1)");
  }
  require(true_class == 0 || true_class == 1, Errc::invalid_argument, "class must be 0 or 1");
  require(inner_draws >= 1, Errc::invalid_argument, "inner draw count must be positive");
  ScheduleDecision out;
  const Stream root(seed);
  if (method == Method::random) {
    Stream s = root.substream("random");
    out.chosen = static_cast<int>(s.index(candidates.size()));
    out.phase = candidates[static_cast<std::size_t>(out.chosen)];
    return out;
  }

  // Stratified standard normals, shared by every candidate.
  std::vector<double> z(static_cast<std::size_t>(inner_draws));
  {
    Stream s = root.substream("inner");
    const boost::math::normal_distribution<double> nd;
    for (int i = 0; i < inner_draws; ++i) {
      const double u = (i + s.uniform()) / inner_draws;
      z[static_cast<std::size_t>(i)] =
          boost::math::quantile(nd, std::clamp(u, 1e-300, 1.0 - 1e-16));
    }
  }
  const double lbf1 = model.log_bf();

  for (double t : candidates) {
    const auto [m0, v0] = model.predictive(0, t);
    const auto [m1, v1] = model.predictive(1, t);
    const double sd0 = std::sqrt(v0), sd1 = std::sqrt(v1);
    // Draws come from the even mixture of both predictives and are
    // reweighted to the one each expectation is taken under; the weights are
    // bounded by 2, so neither tail is starved. w0 - w1 has mean zero and
    // serves as a control variate: when P(H0|x1) is near 0 or 1 the leading
    // term of the gain is proportional to it and would otherwise swamp the
    // estimate.
    const double w0 = posterior_class0(lbf1);
    double sx = 0.0, sxx = 0.0, sy[2] = {0.0, 0.0}, sxy[2] = {0.0, 0.0};
    double h_expected = 0.0;  // Box-Hill only
    for (double zi : z) {
      for (int k = 0; k < 2; ++k) {
        const double x2 = k == 0 ? m0 + sd0 * zi : m1 + sd1 * zi;
        const double l0 = normal_log_pdf(x2, m0, v0), l1 = normal_log_pdf(x2, m1, v1);
        const double lmix = std::max(l0, l1) + std::log1p(std::exp(-std::abs(l0 - l1))) - std::log(2.0);
        const double r0 = std::exp(l0 - lmix), r1 = std::exp(l1 - lmix);
        const double d = sigmoid_diff(lbf1 + l0 - l1, lbf1);
        const double cv = r0 - r1;
        sx += cv;
        sxx += cv * cv;
        sy[0] += r0 * d;
        sy[1] += r1 * d;
        sxy[0] += cv * r0 * d;
        sxy[1] += cv * r1 * d;
        if (method == Method::boxhill) {
          h_expected += (w0 * r0 + (1.0 - w0) * r1) * entropy2(posterior_class0(lbf1 + l0 - l1));
        }
      }
    }
    const double n2 = 2.0 * inner_draws;
    const double var_x = sxx - sx * sx / n2;
    double g0[2];  // E_c[P(H0 | x1, X2)] - P(H0 | x1)
    for (int c = 0; c < 2; ++c) {
      const double gamma = var_x > 1e-300 ? (sxy[c] - sx * sy[c] / n2) / var_x : 0.0;
      g0[c] = (sy[c] - gamma * sx) / n2;
    }
    double value = 0.0;
    switch (method) {
      case Method::oracle:
        // expected rise in P(true class); ranking equals E[P(true | x1, X2)]
        value = true_class == 0 ? g0[0] : -g0[1];
        break;
      case Method::testinfo:
        // posterior-prior-ratio evidence, pi0 = pi1 = 1/2: V(BF) = P(null | x) / 0.5, so
        // V(BF(x1)) - E V(BF(x1, X2)) is a difference of posterior probabilities
        value = order_swapped ? g0[0] / 0.5 : -g0[1] / 0.5;
        break;
      case Method::boxhill:
        value = entropy2(w0) - h_expected / n2;
        break;
      case Method::random: break;
    }
    out.values.push_back(value);
  }
  out.chosen = static_cast<int>(std::max_element(out.values.begin(), out.values.end()) -
                                out.values.begin());
  out.phase = candidates[static_cast<std::size_t>(out.chosen)];
  return out;
}

ScheduleDecision schedule_followup(const LightcurveData& data,
                                   const std::pair<Template, Template>& tpl,
                                   const std::array<HyperPrior, 2>& priors,
                                   const std::vector<double>& candidates, Method method,
                                   int true_class, int inner_draws, std::uint64_t seed) {
  const auto fitted = class_bf(data, tpl, priors, {Engine::laplace, 0, 0});
  return schedule_followup(FollowupModel(data, tpl, fitted), candidates, method, true_class,
                           inner_draws, seed);
}

std::vector<Star> synth_population(int n_stars, const std::pair<Template, Template>& tpl,
                                   const PopulationConfig& config, std::uint64_t seed) {
  require(n_stars >= 0, Errc::invalid_argument, "star count must be non-negative");
  require(config.min_obs >= 2 && config.max_obs >= config.min_obs, Errc::invalid_argument,
          "observation counts must satisfy 2 <= min <= max");
  const std::array<HyperPrior, 2> priors{HyperPrior::for_template(tpl.first),
                                         HyperPrior::for_template(tpl.second)};
  std::vector<Star> stars;
  const Stream root = Stream(seed).substream("population");
  for (int k = 0; k < n_stars; ++k) {
    Stream s = root.substream(static_cast<std::uint64_t>(k));
    Star star;
    star.true_class = k % 2;
    const auto& t = pick(tpl, star.true_class);
    const auto& prior = priors[static_cast<std::size_t>(star.true_class)];
    const int n = config.min_obs +
                  static_cast<int>(s.index(static_cast<std::size_t>(config.max_obs - config.min_obs + 1)));
    std::vector<double> phases(static_cast<std::size_t>(n));
    for (double& p : phases) p = s.uniform();
    std::sort(phases.begin(), phases.end());
    star.truth.alpha = config.offset_sd * s.normal();
    star.truth.scale = config.scale_lo + (config.scale_hi - config.scale_lo) * s.uniform();
    const double noise = config.noise_sd_lo + (config.noise_sd_hi - config.noise_sd_lo) * s.uniform();
    for (double& v : star.truth.nugget) {
      const double sd = noise * (0.8 + 0.4 * s.uniform());
      v = sd * sd;
    }
    star.hyper = {prior.amplitude_median * std::exp(prior.log_sd * s.normal()),
                  prior.lengthscale_median * std::exp(prior.log_sd * s.normal())};
    const auto llt = factor(gp_covariance(phases, star.truth, star.hyper));
    Vector e(n);
    for (int i = 0; i < n; ++i) e[i] = s.normal();
    const Vector x = mean_vector(phases, t, star.truth) + llt.matrixL() * e;
    star.data = make_lightcurve(phases, std::vector<double>(x.data(), x.data() + n), tpl);
    stars.push_back(std::move(star));
  }
  return stars;
}

int ExperimentResult::final_count(Method m) const {
  int stage = -1, value = 0;
  for (const auto& c : counts) {
    if (c.method == m && c.stage >= stage) {
      stage = c.stage;
      value = c.correct;
    }
  }
  require(stage >= 0, Errc::invalid_argument, "method not present in experiment result");
  return value;
}

long ExperimentResult::cumulative_count(Method m) const {
  long total = 0;
  bool seen = false;
  for (const auto& c : counts) {
    if (c.method != m) continue;
    seen = true;
    if (c.stage > 0) total += c.correct;
  }
  require(seen, Errc::invalid_argument, "method not present in experiment result");
  return total;
}

double ExperimentResult::match_rate() const {
  return testinfo_calls > 0 ? static_cast<double>(testinfo_oracle_matches) / testinfo_calls : 0.0;
}

namespace {

int classify(double log_bf) { return log_bf >= 0.0 ? 0 : 1; }

struct Track {
  LightcurveData data;
  ClassBayesFactor fit;
};

}  // namespace

ExperimentResult run_followup_experiment(const ExperimentConfig& config,
                                         const std::pair<Template, Template>& tpl,
                                         std::uint64_t seed) {
  require(config.n_stars >= 1 && config.n_stages >= 0 && config.candidates_per_stage >= 1 &&
              config.inner_draws >= 1 && !config.methods.empty(),
          Errc::invalid_argument, "experiment counts must be positive");
  const std::array<HyperPrior, 2> priors{HyperPrior::for_template(tpl.first),
                                         HyperPrior::for_template(tpl.second)};
  const EngineOptions laplace{Engine::laplace, 0, 0};
  const auto stars = synth_population(config.n_stars, tpl, config.population, seed);

  ExperimentResult res;
  res.n_stars = config.n_stars;
  const std::size_t nm = config.methods.size();
  std::vector<std::vector<int>> correct(static_cast<std::size_t>(config.n_stages) + 1,
                                        std::vector<int>(nm, 0));
  const Stream root = Stream(seed).substream("experiment");

  for (std::size_t k = 0; k < stars.size(); ++k) {
    const Star& star = stars[k];
    const auto initial = class_bf(star.data, tpl, priors, laplace);
    if (classify(initial.bf.log_bf) == star.true_class) continue;
    ++res.tracked;

    // New observations are simulated at the star's generating parameters,
    // conditioned on the oracle's data (a shadow oracle track when the
    // oracle is not among the methods).
    std::vector<Track> tracks(nm, Track{star.data, initial});
    const auto oracle_it = std::find(config.methods.begin(), config.methods.end(), Method::oracle);
    const bool shadow = oracle_it == config.methods.end();
    if (shadow) tracks.push_back(Track{star.data, initial});
    const std::size_t ref = shadow ? nm : static_cast<std::size_t>(oracle_it - config.methods.begin());
    const Template& true_tpl = pick(tpl, star.true_class);

    for (int stage = 1; stage <= config.n_stages; ++stage) {
      Stream s = root.substream(k).substream(static_cast<std::uint64_t>(stage));
      std::vector<double> cand(static_cast<std::size_t>(config.candidates_per_stage));
      for (double& c : cand) c = s.uniform();
      const double z = s.normal();
      const std::uint64_t inner_seed = s.substream("inner").seed();

      const LightcurveData& rd = tracks[ref].data;
      const auto sim_llt = factor(gp_covariance(rd.phases, star.truth, star.hyper));
      const Vector sim_alpha =
          sim_llt.solve(to_vector(rd.mags) - mean_vector(rd.phases, true_tpl, star.truth));
      auto simulate_at = [&](double t) {
        Vector kv(static_cast<Eigen::Index>(rd.phases.size()));
        for (std::size_t i = 0; i < rd.phases.size(); ++i) kv[i] = kernel(t, rd.phases[i], star.hyper);
        const double mean = star.truth.alpha + star.truth.scale * true_tpl(t) + kv.dot(sim_alpha);
        const double var = star.hyper.amplitude * star.hyper.amplitude +
                           star.truth.nugget[phase_bin(t)] -
                           sim_llt.matrixL().solve(kv).squaredNorm();
        return mean + std::sqrt(std::max(var, 0.0)) * z;
      };

      std::vector<double> picks(tracks.size()), values(tracks.size());
      for (std::size_t m = 0; m < tracks.size(); ++m) {
        const Method method = m < nm ? config.methods[m] : Method::oracle;
        const FollowupModel fm(tracks[m].data, tpl, tracks[m].fit);
        const auto d =
            schedule_followup(fm, cand, method, star.true_class, config.inner_draws, inner_seed);
        if (method == Method::testinfo) {
          const auto o = schedule_followup(fm, cand, Method::oracle, star.true_class,
                                           config.inner_draws, inner_seed);
          ++res.testinfo_calls;
          if (o.chosen == d.chosen) ++res.testinfo_oracle_matches;
        }
        picks[m] = d.phase;
        values[m] = simulate_at(d.phase);
      }
      for (std::size_t m = 0; m < tracks.size(); ++m) {
        tracks[m].data.phases.push_back(picks[m]);
        tracks[m].data.mags.push_back(values[m]);
        tracks[m].fit = class_bf(tracks[m].data, tpl, priors, laplace);
        if (m < nm && classify(tracks[m].fit.bf.log_bf) == star.true_class) {
          ++correct[static_cast<std::size_t>(stage)][m];
        }
      }
    }
  }

  for (int stage = 0; stage <= config.n_stages; ++stage) {
    for (std::size_t m = 0; m < nm; ++m) {
      res.counts.push_back({stage, config.methods[m], correct[static_cast<std::size_t>(stage)][m]});
    }
  }
  return res;
}

void write_experiment_csv(std::ostream& out, const ExperimentResult& result) {
  out << "stage,method,correct_count\n";
  for (const auto& c : result.counts) {
    out << c.stage << ',' << to_string(c.method) << ',' << c.correct << '\n';
  }
}

}  // namespace tinfo::lc
