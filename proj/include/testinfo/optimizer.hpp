#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "testinfo/criteria.hpp"
#include "testinfo/models.hpp"

namespace tinfo {

/// Sorted, distinct candidate points with a fixed replication per point.
struct CandidateGrid {
  std::vector<double> points;
  int replications = 1;
  Basis basis = Basis::intercept_slope;
  Box box;

  /// `count` evenly spaced points covering the box.
  static CandidateGrid uniform(int count, Basis basis, int replications = 1, Box box = {});
  /// Sorts, removes duplicates and checks the box.
  CandidateGrid normalized() const;
};

/// Criterion of a design; the seed is shared by every design compared in
/// one pass so stochastic criteria see common random numbers.
using DesignCriterion = std::function<CriterionEstimate(const Design&, std::uint64_t seed)>;

struct TraceEntry {
  int pass = 0;
  int candidate = 0;
  double value = 0.0;
  double se = 0.0;
};

struct SearchResult {
  Design design;
  CriterionEstimate value;
  int iterations = 0;
  int restart = 0;
  /// Menu index for constrained_select; -1 for exchange searches.
  int selected = -1;
  std::vector<TraceEntry> trace;
  bool aborted = false;
  std::string error;
};

struct ExchangeOptions {
  int n_points = 5;
  int max_passes = 20;
  int restarts = 5;
  std::uint64_t seed = 0;
};

/// Single-point exchange: each pass tries every grid candidate at every
/// design position and accepts the best move if it beats the incumbent by
/// more than max(1e-9, 0.5 se). Best of `restarts` random starts.
SearchResult exchange_optimize(const DesignCriterion& criterion, const CandidateGrid& grid,
                               const ExchangeOptions& options);

/// Argmax over a finite menu, evaluated under one seed; ties go to the
/// lowest index.
SearchResult constrained_select(const DesignCriterion& criterion,
                                const std::vector<Design>& menu, std::uint64_t seed);

/// CSV with header `pass,candidate,value,se`.
void write_trace_csv(std::ostream& out, const std::vector<TraceEntry>& trace);

}  // namespace tinfo
