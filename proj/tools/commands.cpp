#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <fstream>
#include <set>
#include <variant>

#include <json.hpp>

#include "testinfo/criteria.hpp"
#include "testinfo/errors.hpp"
#include "testinfo/evidence.hpp"
#include "testinfo/io.hpp"
#include "testinfo/lightcurve.hpp"
#include "testinfo/optimizer.hpp"
#include "testinfo/sequential.hpp"

namespace tinfo::cli {

namespace {

using Cell = std::variant<std::monostate, std::string, double, long, std::uint64_t, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string csv_cell(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(double v) const { return std::isnan(v) ? "" : format_number(v); }
    std::string operator()(long v) const { return std::to_string(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  } visit;
  return std::visit(visit, c);
}

nlohmann::ordered_json json_cell(const Cell& c) {
  struct {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(const std::string& s) const { return s; }
    nlohmann::ordered_json operator()(double v) const {
      if (std::isfinite(v)) return v;
      return nullptr;
    }
    nlohmann::ordered_json operator()(long v) const { return v; }
    nlohmann::ordered_json operator()(std::uint64_t v) const { return v; }
    nlohmann::ordered_json operator()(bool v) const { return v; }
  } visit;
  return std::visit(visit, c);
}

std::filesystem::path out_path(const Options& opts, const std::string& file) {
  std::filesystem::create_directories(opts.out);
  return std::filesystem::path(opts.out) / file;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  require(out.good(), Errc::invalid_argument, "cannot write " + p.string());
  return out;
}

void write_table(const Table& t, const Options& opts, const std::string& stem) {
  if (opts.format == Format::csv) {
    auto out = open_out(out_path(opts, stem + ".csv"));
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& r : t.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_cell(r[i]);
      out << '\n';
    }
  } else {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
      nlohmann::ordered_json obj;
      for (std::size_t i = 0; i < r.size(); ++i) obj[t.columns[i]] = json_cell(r[i]);
      arr.push_back(std::move(obj));
    }
    auto out = open_out(out_path(opts, stem + ".json"));
    out << arr.dump(2) << '\n';
  }
}

Table estimates_table(const std::vector<CriterionEstimate>& es) {
  Table t{{"criterion", "value", "se", "draws", "seed"}, {}};
  for (const auto& e : es) {
    t.rows.push_back({e.criterion, e.value, e.standard_error, e.draws, e.seed});
  }
  return t;
}

std::uint64_t component_seed(const Options& opts, std::string_view component) {
  return Stream(opts.seed).substream(component).seed();
}

int positive(long v, const std::string& what) {
  if (v < 1 || v > 1'000'000'000) throw ConfigError(what + " must be a positive integer");
  return static_cast<int>(v);
}

int non_negative(long v, const std::string& what) {
  if (v < 0 || v > 1'000'000'000) throw ConfigError(what + " must be a non-negative integer");
  return static_cast<int>(v);
}

struct ProblemSpec {
  TwoHypothesisProblem problem;
  Basis basis = Basis::intercept_slope;
  Box box;
  bool linear = true;
  Vector null;
  Vector alt_mean;
  Matrix alt_cov;
  double noise_variance = 1.0;
};

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ProblemSpec read_problem(Config& c) {
  ProblemSpec s;
  const auto family = c.str("problem", "family", "linear-gaussian");
  const double prior0 = c.real("problem", "prior0", 0.5);
  s.box = {c.real("problem", "box_lo", -1.0), c.real("problem", "box_hi", 1.0)};
  s.basis = parse_basis(c.str("problem", "basis", "intercept-slope"));
  if (family == "linear-gaussian") {
    s.noise_variance = c.real("problem", "noise_variance", 1.0);
    s.null = to_vector(c.reals("problem", "null"));
    s.alt_mean = to_vector(c.reals("problem", "alt_mean"));
    s.alt_cov = c.matrix("problem", "alt_cov");
    s.problem = {prior0, 1.0 - prior0, Hypothesis::linear_point(s.null, s.noise_variance),
                 Hypothesis::linear_gaussian(s.alt_mean, s.alt_cov, s.noise_variance)};
    if (static_cast<std::size_t>(s.null.size()) != basis_dimension(s.basis)) {
      throw ConfigError("[problem] null has " + std::to_string(s.null.size()) +
                        " entries but the basis has dimension " +
                        std::to_string(basis_dimension(s.basis)));
    }
  } else if (family == "link-discrimination") {
    s.linear = false;
    if (s.basis != Basis::intercept_slope) {
      throw ConfigError("[problem] link-discrimination requires basis = intercept-slope");
    }
    s.problem = link_discrimination_problem(to_vector(c.reals("problem", "coef_mean")),
                                            c.matrix("problem", "coef_cov"), prior0);
  } else {
    throw ConfigError("[problem] family must be linear-gaussian or link-discrimination");
  }
  s.problem.validate();
  return s;
}

Design read_design(Config& c, const ProblemSpec& p) {
  const auto file = c.str("design", "file", "");
  const bool has_points = c.has("design", "points");
  const long reps = c.integer("design", "replications", 1);
  if (!file.empty() && has_points) throw ConfigError("[design] give either file or points, not both");
  if (!file.empty()) return read_design_csv(file, p.basis, p.box);
  const auto pts = c.reals("design", "points");
  if (pts.empty()) throw ConfigError("[design] points is empty");
  return Design::replicated(pts, positive(reps, "[design] replications"), p.basis, p.box);
}

Order parse_order(const std::string& s) {
  if (s == "h0-h1") return Order::h0_h1;
  if (s == "h1-h0") return Order::h1_h0;
  throw ConfigError("order must be h0-h1 or h1-h0, got '" + s + "'");
}

// Criterion keys shared by `criteria` and `optimize`.
struct CriterionSettings {
  EvidenceFunction evidence = EvidenceFunction::log();
  EngineOptions engine;
  Order order = Order::h0_h1;
  int draws = 2000;
  bool antithetic = false;
  PowerOptions power;
};

CriterionSettings read_settings(Config& c, const std::string& sec, const Options& opts,
                                const ProblemSpec& p) {
  CriterionSettings s;
  const auto ev = c.str(sec, "evidence", "log");
  s.evidence = EvidenceFunction::preset(ev, c.real(sec, "evidence_prior0", p.problem.prior0));
  s.engine.kind = parse_engine(c.str(sec, "engine", p.linear ? "exact" : "mle"));
  s.engine.draws = positive(c.integer(sec, "engine_draws", 1000), "[" + sec + "] engine_draws");
  s.order = parse_order(c.str(sec, "order", "h0-h1"));
  s.draws = positive(c.integer(sec, "draws", 2000), "[" + sec + "] draws");
  if (opts.draws) s.draws = *opts.draws;
  s.antithetic = c.flag(sec, "antithetic", false);
  s.power.size = c.real(sec, "size", 0.05);
  s.power.outer_draws = positive(c.integer(sec, "outer_draws", 200), "[" + sec + "] outer_draws");
  s.power.calibration_draws =
      positive(c.integer(sec, "calibration_draws", 2000), "[" + sec + "] calibration_draws");
  if (!(s.power.size > 0.0 && s.power.size < 1.0)) throw ConfigError("[" + sec + "] size must lie in (0,1)");
  return s;
}

const std::set<std::string> kCriteria{"tk", "d", "expected", "box-hill", "power", "observed"};

void check_criterion_name(const std::string& name, const ProblemSpec& p) {
  if (!kCriteria.count(name)) {
    throw ConfigError("unknown criterion '" + name +
                      "' (expected tk, d, expected, box-hill, power or observed)");
  }
  if ((name == "tk" || name == "d") && !p.linear) {
    throw ConfigError("criterion '" + name + "' needs a linear-gaussian problem");
  }
}

CriterionEstimate evaluate(const std::string& name, const ProblemSpec& p,
                           const CriterionSettings& s, const Design& design,
                           std::uint64_t seed) {
  EngineOptions engine = s.engine;
  engine.seed = Stream(seed).substream("engine").seed();
  const McOptions mc{s.draws, seed, s.antithetic};
  if (name == "tk") {
    return tk_closed_form(design.matrix(), p.null, p.alt_mean, p.alt_cov, p.noise_variance);
  }
  if (name == "d") return d_criterion(design.matrix(), p.alt_cov, p.noise_variance);
  if (name == "expected") return expected_test_info(p.problem, design, s.evidence, engine, s.order, mc);
  if (name == "box-hill") return box_hill(p.problem, design, engine, mc);
  PowerOptions po = s.power;
  po.seed = seed;
  return prior_mean_power(p.problem, design, po);
}

}  // namespace

Options resolve_options(Config& config, const std::optional<std::uint64_t>& seed,
                        const std::optional<std::string>& out,
                        const std::optional<std::string>& format,
                        const std::optional<int>& draws) {
  Options o;
  o.seed = seed ? *seed : config.seed("run", "seed", 1);
  o.out = out ? *out : config.str("run", "out", ".");
  const auto fmt = format ? *format : config.str("run", "format", "csv");
  if (fmt == "csv") {
    o.format = Format::csv;
  } else if (fmt == "json") {
    o.format = Format::json;
  } else {
    throw ConfigError("format must be csv or json, got '" + fmt + "'");
  }
  const bool cfg_draws = config.has("run", "draws");
  const long d = config.integer("run", "draws", 0);
  if (draws) {
    o.draws = positive(*draws, "--draws");
  } else if (cfg_draws) {
    o.draws = positive(d, "[run] draws");
  }
  return o;
}

Runner prepare_criteria(Config& c, const Options& opts) {
  const auto p = read_problem(c);
  const auto design = read_design(c, p);
  const auto names = c.words("criteria", "names", {"tk"});
  if (names.empty()) throw ConfigError("[criteria] names is empty");
  for (const auto& n : names) check_criterion_name(n, p);
  const auto s = read_settings(c, "criteria", opts, p);
  const auto data_file = c.str("criteria", "data", "");
  Vector x;
  const bool want_observed = std::count(names.begin(), names.end(), "observed") > 0;
  if (want_observed) {
    if (data_file.empty()) throw ConfigError("criterion 'observed' needs [criteria] data");
    x = dataset_response(read_dataset_csv(data_file), design);
  }
  return [=] {
    std::vector<CriterionEstimate> out;
    for (const auto& n : names) {
      const auto seed = Stream(component_seed(opts, "criteria")).substream(n).seed();
      if (n == "observed") {
        const double v = observed_test_info(p.problem, design, x, s.evidence, s.engine, s.order);
        out.push_back({"observed-" + criterion_tag(s.evidence), v, 0.0, 0, 0});
      } else {
        out.push_back(evaluate(n, p, s, design, seed));
      }
    }
    write_table(estimates_table(out), opts, "criteria");
  };
}

Runner prepare_optimize(Config& c, const Options& opts) {
  const auto p = read_problem(c);
  CandidateGrid grid;
  grid.basis = p.basis;
  grid.box = p.box;
  grid.replications = positive(c.integer("grid", "replications", 1), "[grid] replications");
  if (c.has("grid", "points") && c.has("grid", "count")) {
    throw ConfigError("[grid] give either count or points, not both");
  }
  if (c.has("grid", "points")) {
    grid.points = c.reals("grid", "points");
  } else {
    const long count = c.integer("grid", "count", 21);
    if (count < 1) throw ConfigError("[grid] is empty");
    grid.points = CandidateGrid::uniform(static_cast<int>(count), p.basis, 1, p.box).points;
  }
  if (grid.points.empty()) throw ConfigError("[grid] is empty");
  for (double t : grid.points) {
    if (!p.box.contains(t)) throw ConfigError("[grid] point " + format_number(t) + " lies outside the box");
  }
  const auto name = c.str("search", "criterion", "tk");
  check_criterion_name(name, p);
  if (name == "observed") throw ConfigError("[search] criterion 'observed' cannot be optimized");
  ExchangeOptions eo;
  eo.n_points = positive(c.integer("search", "n_points", 5), "[search] n_points");
  eo.max_passes = positive(c.integer("search", "max_passes", 20), "[search] max_passes");
  eo.restarts = positive(c.integer("search", "restarts", 5), "[search] restarts");
  eo.seed = component_seed(opts, "optimize");
  const auto s = read_settings(c, "search", opts, p);
  return [=] {
    const DesignCriterion crit = [&](const Design& d, std::uint64_t seed) {
      return evaluate(name, p, s, d, seed);
    };
    const auto res = exchange_optimize(crit, grid, eo);
    if (res.aborted) throw Error(Errc::aborted_estimate, res.error);
    // repeated support points are merged into one row
    std::map<double, long> support;
    for (std::size_t i = 0; i < res.design.size(); ++i) {
      support[res.design.points()[i]] += res.design.replications()[i];
    }
    Table design{{"point", "replications"}, {}};
    for (const auto& [t, n] : support) design.rows.push_back({t, n});
    Table trace{{"pass", "candidate", "value", "se"}, {}};
    for (const auto& e : res.trace) {
      trace.rows.push_back({static_cast<long>(e.pass), static_cast<long>(e.candidate), e.value, e.se});
    }
    write_table(design, opts, "design");
    write_table(trace, opts, "trace");
    write_table(estimates_table({res.value}), opts, "optimum");
  };
}

Runner prepare_simulate(Config& c, const Options& opts) {
  const auto p = read_problem(c);
  const auto design = read_design(c, p);
  const auto hyp = c.str("simulate", "hypothesis", "h1");
  if (hyp != "h0" && hyp != "h1") throw ConfigError("[simulate] hypothesis must be h0 or h1");
  std::optional<Vector> params;
  if (c.has("simulate", "params")) params = to_vector(c.reals("simulate", "params"));
  return [=] {
    Stream rng(component_seed(opts, "simulate"));
    const Vector x = simulate(p.problem, design, hyp == "h0" ? Which::h0 : Which::h1, params, rng);
    Table t{{"row_index", "point", "response"}, {}};
    const auto entries = design.row_entries();
    for (std::size_t r = 0; r < entries.size(); ++r) {
      t.rows.push_back({static_cast<long>(r), design.points()[entries[r]],
                        x[static_cast<Eigen::Index>(r)]});
    }
    write_table(t, opts, "dataset");
  };
}

Runner prepare_sequential(Config& c, const Options& opts) {
  SequentialStudyConfig cfg;
  const std::string sec = "study";
  cfg.scenario = parse_scenario(c.str(sec, "scenario", "parabola"));
  cfg.beta_draws = positive(c.integer(sec, "beta_draws", cfg.beta_draws), "[study] beta_draws");
  cfg.datasets_per_beta =
      positive(c.integer(sec, "datasets_per_beta", cfg.datasets_per_beta), "[study] datasets_per_beta");
  cfg.observed_points = c.reals(sec, "observed_points", cfg.observed_points);
  cfg.n_mis = positive(c.integer(sec, "n_mis", cfg.n_mis), "[study] n_mis");
  cfg.cov_scale = c.real(sec, "cov_scale", cfg.cov_scale);
  cfg.noise_variance = c.real(sec, "noise_variance", cfg.noise_variance);
  cfg.size = c.real(sec, "size", cfg.size);
  cfg.inner_draws = positive(c.integer(sec, "inner_draws", cfg.inner_draws), "[study] inner_draws");
  if (opts.draws) cfg.inner_draws = *opts.draws;
  cfg.grid_points = positive(c.integer(sec, "grid_points", cfg.grid_points), "[study] grid_points");
  cfg.restarts = positive(c.integer(sec, "restarts", cfg.restarts), "[study] restarts");
  cfg.max_passes = positive(c.integer(sec, "max_passes", cfg.max_passes), "[study] max_passes");
  std::vector<Procedure> procs;
  for (const auto& w : c.words(sec, "procedures", {"P", "TK", "D"})) procs.push_back(parse_procedure(w));
  if (procs.empty()) throw ConfigError("[study] procedures is empty");
  const bool constrained = c.flag(sec, "constrained", false);
  cfg.validate();
  return [=] {
    const auto rows = run_sequential_study(cfg, procs, constrained, component_seed(opts, "sequential"));
    Table t{{"procedure", "scenario", "constrained", "power", "se", "frac_design_i"}, {}};
    for (const auto& r : rows) {
      t.rows.push_back({std::string(to_string(r.procedure)), std::string(to_string(r.scenario)),
                        r.constrained, r.power, r.se, r.frac_design_i});
    }
    write_table(t, opts, "study");
  };
}

Runner prepare_theorem1(Config& c, const Options& opts) {
  const std::string sec = "theorem1";
  Theorem1Config cfg;
  cfg.theta_obs = c.real(sec, "theta_obs", cfg.theta_obs);
  cfg.n_obs = positive(c.integer(sec, "n_obs", cfg.n_obs), "[theorem1] n_obs");
  cfg.n_mis = non_negative(c.integer(sec, "n_mis", cfg.n_mis), "[theorem1] n_mis");
  cfg.noise_variance = c.real(sec, "noise_variance", cfg.noise_variance);
  const auto deltas = c.reals(sec, "deltas", std::vector<double>{0.2, 0.1, 0.05});
  const auto v = EvidenceFunction::preset(c.str(sec, "evidence", "log"),
                                          c.real(sec, "evidence_prior0", 0.5));
  McOptions mc;
  mc.draws = positive(c.integer(sec, "draws", 100000), "[theorem1] draws");
  if (opts.draws) mc.draws = *opts.draws;
  mc.antithetic = c.flag(sec, "antithetic", true);
  mc.seed = component_seed(opts, "theorem1");
  return [=] {
    const auto rows = theorem1_check(cfg, deltas, v, mc);
    Table t{{"delta", "numeric", "analytic", "abs_error", "se"}, {}};
    for (const auto& r : rows) t.rows.push_back({r.delta, r.numeric, r.analytic, r.abs_error, r.standard_error});
    write_table(t, opts, "theorem1");
  };
}

Runner prepare_appendix_b(Config& c, const Options& opts) {
  const std::string sec = "appendix_b";
  const double p0 = c.real(sec, "prior0", 0.999);
  const double p1 = c.real(sec, "prior1", 0.001);
  const double alpha = c.real(sec, "alpha", 0.99);
  const double b1 = c.real(sec, "beta1", 0.1);
  const double b2 = c.real(sec, "beta2", 0.9);
  return [=] {
    const auto r = appendix_b_example(p0, p1, alpha, b1, b2);
    Table t{{"quantity", "value"}, {}};
    auto add = [&](std::string k, Cell v) { t.rows.push_back({std::move(k), std::move(v)}); };
    add("prior0", r.prior0);
    add("prior1", r.prior1);
    add("alpha", r.alpha);
    add("beta1", r.beta1);
    add("beta2", r.beta2);
    for (const auto& [tag, d] : {std::pair{"t1", &r.t1}, std::pair{"t2", &r.t2}}) {
      const std::string pre = tag;
      add(pre + ".box_hill", d->box_hill);
      add(pre + ".p_criterion", d->p_criterion);
      add(pre + ".correct_h0", d->correct_h0);
      add(pre + ".correct_h1", d->correct_h1);
      add(pre + ".expected_true_h0", d->expected_true_h0);
      add(pre + ".expected_true_h1", d->expected_true_h1);
    }
    add("bh1", r.bh1);
    add("bh2", r.bh2);
    add("bh3", r.bh3);
    add("bh4", r.bh4);
    add("bh5", r.bh5);
    write_table(t, opts, "appendix_b");
  };
}

Runner prepare_lightcurve(Config& c, const Options& opts) {
  const std::string sec = "lightcurve";
  lc::ExperimentConfig cfg;
  cfg.n_stars = positive(c.integer(sec, "n_stars", cfg.n_stars), "[lightcurve] n_stars");
  cfg.n_stages = non_negative(c.integer(sec, "n_stages", cfg.n_stages), "[lightcurve] n_stages");
  cfg.candidates_per_stage =
      positive(c.integer(sec, "candidates_per_stage", cfg.candidates_per_stage),
               "[lightcurve] candidates_per_stage");
  cfg.inner_draws = positive(c.integer(sec, "inner_draws", cfg.inner_draws), "[lightcurve] inner_draws");
  if (opts.draws) cfg.inner_draws = *opts.draws;
  cfg.methods.clear();
  for (const auto& w : c.words(sec, "methods", {"oracle", "testinfo", "boxhill", "random"})) {
    cfg.methods.push_back(lc::parse_method(w));
  }
  if (cfg.methods.empty()) throw ConfigError("[lightcurve] methods is empty");
  auto& pop = cfg.population;
  pop.min_obs = positive(c.integer(sec, "min_obs", pop.min_obs), "[lightcurve] min_obs");
  pop.max_obs = positive(c.integer(sec, "max_obs", pop.max_obs), "[lightcurve] max_obs");
  pop.noise_sd_lo = c.real(sec, "noise_sd_lo", pop.noise_sd_lo);
  pop.noise_sd_hi = c.real(sec, "noise_sd_hi", pop.noise_sd_hi);
  pop.scale_lo = c.real(sec, "scale_lo", pop.scale_lo);
  pop.scale_hi = c.real(sec, "scale_hi", pop.scale_hi);
  pop.offset_sd = c.real(sec, "offset_sd", pop.offset_sd);
  if (pop.min_obs > pop.max_obs) throw ConfigError("[lightcurve] min_obs exceeds max_obs");
  if (!(pop.noise_sd_lo > 0 && pop.noise_sd_lo <= pop.noise_sd_hi && pop.scale_lo <= pop.scale_hi &&
        pop.offset_sd >= 0)) {
    throw ConfigError("[lightcurve] population ranges are invalid");
  }
  const auto t0 = c.str(sec, "template0", "");
  const auto t1 = c.str(sec, "template1", "");
  if (t0.empty() != t1.empty()) throw ConfigError("[lightcurve] give both template0 and template1 or neither");
  const auto tpl = t0.empty() ? lc::synth_templates() : lc::load_templates(t0, t1);
  return [=] {
    const auto res = lc::run_followup_experiment(cfg, tpl, component_seed(opts, "lightcurve"));
    Table counts{{"stage", "method", "correct_count"}, {}};
    for (const auto& s : res.counts) {
      counts.rows.push_back({static_cast<long>(s.stage), std::string(lc::to_string(s.method)),
                             static_cast<long>(s.correct)});
    }
    Table summary{{"quantity", "value"}, {}};
    summary.rows.push_back({std::string("n_stars"), static_cast<long>(res.n_stars)});
    summary.rows.push_back({std::string("tracked"), static_cast<long>(res.tracked)});
    summary.rows.push_back({std::string("testinfo_calls"), res.testinfo_calls});
    summary.rows.push_back({std::string("testinfo_oracle_matches"), res.testinfo_oracle_matches});
    summary.rows.push_back({std::string("match_rate"), res.match_rate()});
    for (auto m : cfg.methods) {
      summary.rows.push_back({"final." + std::string(lc::to_string(m)),
                              static_cast<long>(res.final_count(m))});
    }
    write_table(counts, opts, "experiment");
    write_table(summary, opts, "lightcurve_summary");
    for (int k = 0; k < 2; ++k) {
      auto out = open_out(out_path(opts, "template" + std::to_string(k) + ".csv"));
      lc::write_template(out, k == 0 ? tpl.first : tpl.second);
    }
  };
}

}  // namespace tinfo::cli
