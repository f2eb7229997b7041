#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "testinfo/models.hpp"

namespace tinfo::cli {

// Anything wrong with the configuration or flags; maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// INI config with sections. Every key read is remembered so that leftovers
// can be reported as unknown.
class Config {
 public:
  Config() = default;
  static Config load(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;

  std::string str(const std::string& section, const std::string& key,
                  const std::optional<std::string>& fallback = std::nullopt);
  double real(const std::string& section, const std::string& key,
              std::optional<double> fallback = std::nullopt);
  long integer(const std::string& section, const std::string& key,
               std::optional<long> fallback = std::nullopt);
  std::uint64_t seed(const std::string& section, const std::string& key, std::uint64_t fallback);
  bool flag(const std::string& section, const std::string& key, bool fallback);
  std::vector<double> reals(const std::string& section, const std::string& key,
                            const std::optional<std::vector<double>>& fallback = std::nullopt);
  std::vector<std::string> words(const std::string& section, const std::string& key,
                                 const std::vector<std::string>& fallback);
  Matrix matrix(const std::string& section, const std::string& key);

  // Throws ConfigError naming every key that was never read.
  void reject_unknown() const;

 private:
  std::optional<std::string> raw(const std::string& section, const std::string& key);

  boost::property_tree::ptree tree_;
  std::set<std::string> used_;
};

double parse_real(const std::string& text, const std::string& what);
long parse_integer(const std::string& text, const std::string& what);
std::vector<std::string> split_list(const std::string& text, char sep = ',');

}  // namespace tinfo::cli
