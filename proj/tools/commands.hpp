#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "config.hpp"

namespace tinfo::cli {

enum class Format { csv, json };

struct Options {
  std::uint64_t seed = 1;
  std::string out = ".";
  Format format = Format::csv;
  std::optional<int> draws;
};

// Reads the [run] section; command-line values win over it.
Options resolve_options(Config& config, const std::optional<std::uint64_t>& seed,
                        const std::optional<std::string>& out,
                        const std::optional<std::string>& format,
                        const std::optional<int>& draws);

// prepare_* validates everything that can be checked before computing and
// returns the computation. Throwing from prepare means a bad config.
using Runner = std::function<void()>;

Runner prepare_criteria(Config& config, const Options& opts);
Runner prepare_optimize(Config& config, const Options& opts);
Runner prepare_simulate(Config& config, const Options& opts);
Runner prepare_sequential(Config& config, const Options& opts);
Runner prepare_theorem1(Config& config, const Options& opts);
Runner prepare_appendix_b(Config& config, const Options& opts);
Runner prepare_lightcurve(Config& config, const Options& opts);

}  // namespace tinfo::cli
