#include "testinfo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "testinfo/errors.hpp"

namespace tinfo {

CandidateGrid CandidateGrid::uniform(int count, Basis basis, int replications, Box box) {
  require(count >= 1, Errc::invalid_argument, "grid needs at least one point");
  CandidateGrid g;
  g.basis = basis;
  g.replications = replications;
  g.box = box;
  if (count == 1) {
    g.points = {0.5 * (box.lo + box.hi)};
    return g;
  }
  for (int i = 0; i < count; ++i) {
    // Endpoints are hit exactly.
    g.points.push_back(i == count - 1 ? box.hi
                                      : box.lo + (box.hi - box.lo) * i / (count - 1));
  }
  return g;
}

CandidateGrid CandidateGrid::normalized() const {
  require(!points.empty(), Errc::invalid_argument, "candidate grid is empty");
  require(replications >= 1, Errc::invalid_argument, "replications must be positive");
  CandidateGrid g = *this;
  std::sort(g.points.begin(), g.points.end());
  g.points.erase(std::unique(g.points.begin(), g.points.end()), g.points.end());
  for (double t : g.points) {
    require(box.contains(t), Errc::invalid_argument, "grid point outside the design box");
  }
  return g;
}

namespace {

Design make_design(const CandidateGrid& g, const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> pts;
  pts.reserve(sorted.size());
  for (auto i : sorted) pts.push_back(g.points[i]);
  return Design::replicated(std::move(pts), g.replications, g.basis, g.box);
}

double tolerance(const CriterionEstimate& e) {
  return std::max(1e-9, 0.5 * e.standard_error);
}

struct RunOutcome {
  std::vector<std::size_t> idx;
  CriterionEstimate value;
  int passes = 0;
  std::vector<TraceEntry> trace;
};

// Fills `run` in place so a failing criterion leaves the partial trace behind.
void run_exchange(const DesignCriterion& criterion, const CandidateGrid& g,
                  const ExchangeOptions& o, int restart, RunOutcome& run) {
  Stream start = Stream(o.seed).substream("start").substream(static_cast<std::uint64_t>(restart));
  for (int i = 0; i < o.n_points; ++i) run.idx.push_back(start.index(g.points.size()));

  for (int pass = 1; pass <= o.max_passes; ++pass) {
    run.passes = pass;
    const std::uint64_t pass_seed = mix64(o.seed ^ (0x9e37ULL * static_cast<std::uint64_t>(pass)));
    run.value = criterion(make_design(g, run.idx), pass_seed);
    if (pass == 1) run.trace.push_back({pass, -1, run.value.value, run.value.standard_error});
    bool moved = false;
    for (std::size_t pos = 0; pos < run.idx.size(); ++pos) {
      std::size_t best_c = run.idx[pos];
      CriterionEstimate best = run.value;
      for (std::size_t c = 0; c < g.points.size(); ++c) {
        if (c == run.idx[pos]) continue;
        auto cand = run.idx;
        cand[pos] = c;
        auto v = criterion(make_design(g, cand), pass_seed);
        if (v.value > best.value) {
          best = v;
          best_c = c;
        }
      }
      if (best_c != run.idx[pos] && best.value > run.value.value + tolerance(run.value)) {
        run.idx[pos] = best_c;
        run.value = best;
        moved = true;
        run.trace.push_back({pass, static_cast<int>(best_c), best.value, best.standard_error});
      }
    }
    if (!moved) break;
  }
}

}  // namespace

SearchResult exchange_optimize(const DesignCriterion& criterion, const CandidateGrid& grid,
                               const ExchangeOptions& options) {
  require(options.n_points >= 1, Errc::invalid_argument, "n_points must be at least 1");
  require(options.max_passes >= 1 && options.restarts >= 1, Errc::invalid_argument,
          "max_passes and restarts must be positive");
  const CandidateGrid g = grid.normalized();
  SearchResult result;
  std::vector<RunOutcome> runs;
  try {
    for (int r = 0; r < options.restarts; ++r) {
      runs.emplace_back();
      run_exchange(criterion, g, options, r, runs.back());
      result.iterations += runs.back().passes;
    }
    // Re-score the finalists under one seed so stochastic values compare fairly.
    const std::uint64_t final_seed = mix64(options.seed ^ 0xf1a1ULL);
    int best = 0;
    CriterionEstimate best_value;
    for (int r = 0; r < static_cast<int>(runs.size()); ++r) {
      auto v = criterion(make_design(g, runs[static_cast<std::size_t>(r)].idx), final_seed);
      if (r == 0 || v.value > best_value.value + tolerance(best_value)) {
        best = r;
        best_value = v;
      }
    }
    result.restart = best;
    result.trace = runs[static_cast<std::size_t>(best)].trace;
    result.design = make_design(g, runs[static_cast<std::size_t>(best)].idx);
    result.value = best_value;
  } catch (const Error& e) {
    result.aborted = true;
    result.error = e.what();
    if (!runs.empty() && !runs.back().idx.empty()) {
      result.design = make_design(g, runs.back().idx);
      result.value = runs.back().value;
      result.trace = runs.back().trace;
    }
  }
  return result;
}

SearchResult constrained_select(const DesignCriterion& criterion,
                                const std::vector<Design>& menu, std::uint64_t seed) {
  require(!menu.empty(), Errc::invalid_argument, "design menu is empty");
  SearchResult result;
  result.iterations = 1;
  for (std::size_t i = 0; i < menu.size(); ++i) {
    auto v = criterion(menu[i], seed);
    result.trace.push_back({1, static_cast<int>(i), v.value, v.standard_error});
    if (i == 0 || v.value > result.value.value) {
      result.selected = static_cast<int>(i);
      result.value = v;
    }
  }
  result.design = menu[static_cast<std::size_t>(result.selected)];
  return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceEntry>& trace) {
  out << "pass,candidate,value,se\n";
  const auto prec = out.precision(17);
  for (const auto& t : trace) {
    out << t.pass << ',' << t.candidate << ',' << t.value << ',' << t.se << '\n';
  }
  out.precision(prec);
}

}  // namespace tinfo
