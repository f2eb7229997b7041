#include "testinfo/errors.hpp"

namespace tinfo {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::domain: return "domain";
    case Errc::degenerate_at_one: return "degenerate-at-one";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::unsupported_model: return "unsupported-model";
    case Errc::rank_deficient: return "rank-deficient";
    case Errc::singular_matrix: return "singular-matrix";
    case Errc::degenerate_estimate: return "degenerate-estimate";
    case Errc::aborted_estimate: return "aborted-estimate";
    case Errc::insufficient_calibration: return "insufficient-calibration";
    case Errc::undefined_fraction: return "undefined-fraction";
    case Errc::factorization: return "factorization";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::parse: return "parse";
  }
  return "unknown";
}

}  // namespace tinfo
