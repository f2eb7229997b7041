#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

namespace tinfo::cli {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

std::string name(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

}  // namespace

double parse_real(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(what + ": expected a number, got '" + s + "'");
  }
  return v;
}

long parse_integer(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(what + ": expected an integer, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Config Config::load(const std::string& path) {
  Config c;
  try {
    pt::read_ini(path, c.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

Config Config::from_string(const std::string& text) {
  Config c;
  std::istringstream in(text);
  try {
    pt::read_ini(in, c.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
  return sec && sec->get_child_optional(pt::ptree::path_type(key, '\0'));
}

std::optional<std::string> Config::raw(const std::string& section, const std::string& key) {
  used_.insert(section + '\0' + key);
  auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
  if (!sec) return std::nullopt;
  auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
  if (!v) return std::nullopt;
  return trim(*v);
}

std::string Config::str(const std::string& section, const std::string& key,
                        const std::optional<std::string>& fallback) {
  if (auto v = raw(section, key)) return *v;
  if (!fallback) throw ConfigError("missing required key " + name(section, key));
  return *fallback;
}

double Config::real(const std::string& section, const std::string& key,
                    std::optional<double> fallback) {
  if (auto v = raw(section, key)) return parse_real(*v, name(section, key));
  if (!fallback) throw ConfigError("missing required key " + name(section, key));
  return *fallback;
}

long Config::integer(const std::string& section, const std::string& key,
                     std::optional<long> fallback) {
  if (auto v = raw(section, key)) return parse_integer(*v, name(section, key));
  if (!fallback) throw ConfigError("missing required key " + name(section, key));
  return *fallback;
}

std::uint64_t Config::seed(const std::string& section, const std::string& key,
                           std::uint64_t fallback) {
  auto v = raw(section, key);
  if (!v) return fallback;
  std::uint64_t s = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), s);
  if (v->empty() || ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError(name(section, key) + ": expected an unsigned 64-bit integer");
  }
  return s;
}

bool Config::flag(const std::string& section, const std::string& key, bool fallback) {
  auto v = raw(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "0") return false;
  throw ConfigError(name(section, key) + ": expected true or false, got '" + *v + "'");
}

std::vector<double> Config::reals(const std::string& section, const std::string& key,
                                  const std::optional<std::vector<double>>& fallback) {
  auto v = raw(section, key);
  if (!v) {
    if (!fallback) throw ConfigError("missing required key " + name(section, key));
    return *fallback;
  }
  std::vector<double> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_real(item, name(section, key)));
  return out;
}

std::vector<std::string> Config::words(const std::string& section, const std::string& key,
                                       const std::vector<std::string>& fallback) {
  auto v = raw(section, key);
  return v ? split_list(*v) : fallback;
}

Matrix Config::matrix(const std::string& section, const std::string& key) {
  auto v = raw(section, key);
  if (!v) throw ConfigError("missing required key " + name(section, key));
  const auto rows = split_list(*v, ';');
  if (rows.empty()) throw ConfigError(name(section, key) + ": empty matrix");
  std::vector<std::vector<double>> cells;
  for (const auto& r : rows) {
    cells.emplace_back();
    for (const auto& item : split_list(r)) cells.back().push_back(parse_real(item, name(section, key)));
    if (cells.back().size() != cells.front().size()) {
      throw ConfigError(name(section, key) + ": ragged matrix rows");
    }
  }
  Matrix m(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(cells[0].size()));
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < cells[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cells[i][j];
  return m;
}

void Config::reject_unknown() const {
  std::vector<std::string> unknown;
  for (const auto& [section, body] : tree_) {
    if (body.empty()) {
      if (!body.data().empty()) unknown.push_back(section + " (outside any section)");
      continue;
    }
    for (const auto& [key, value] : body) {
      if (!used_.count(section + '\0' + key)) unknown.push_back(name(section, key));
    }
  }
  if (unknown.empty()) return;
  std::string msg = "unknown config keys:";
  for (const auto& u : unknown) msg += " " + u + ";";
  msg.pop_back();
  throw ConfigError(msg);
}

}  // namespace tinfo::cli
