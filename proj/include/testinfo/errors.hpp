#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tinfo {

enum class Errc {
  domain,
  degenerate_at_one,
  dimension_mismatch,
  unsupported_model,
  rank_deficient,
  singular_matrix,
  degenerate_estimate,
  aborted_estimate,
  insufficient_calibration,
  undefined_fraction,
  factorization,
  invalid_argument,
  parse,
};

std::string_view to_string(Errc code);

/// Library-wide exception; `code()` is what the CLI reports in error records.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace tinfo
