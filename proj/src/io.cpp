#include "testinfo/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "testinfo/errors.hpp"

namespace tinfo {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_field(std::string_view s, const std::string& where) {
  s = trim(s);
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::parse, where + ": bad number '" + std::string(s) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw Error(Errc::parse, where + ": non-finite value");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto c = line.find(',', start);
    out.push_back(line.substr(start, c == std::string_view::npos ? c : c - start));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

// Reads a CSV with the given header; calls row(fields, where) per data line.
template <class F>
void read_csv(const std::string& path, std::string_view header, std::size_t width, F row) {
  std::ifstream in(path);
  require(in.good(), Errc::parse, path + ": cannot open");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::parse, path + ": empty file");
  require(trim(line) == header, Errc::parse,
          path + ": expected header '" + std::string(header) + "'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    const std::string where = path + ":" + std::to_string(lineno);
    require(f.size() == width, Errc::parse, where + ": expected " + std::to_string(width) + " fields");
    row(f, where);
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_design_csv(std::ostream& out, const Design& design) {
  out << "point,replications\n";
  for (std::size_t i = 0; i < design.size(); ++i) {
    out << format_number(design.points()[i]) << ',' << design.replications()[i] << '\n';
  }
}

Design read_design_csv(const std::string& path, Basis basis, Box box) {
  std::vector<double> pts;
  std::vector<int> reps;
  read_csv(path, "point,replications", 2, [&](const auto& f, const std::string& where) {
    pts.push_back(parse_field<double>(f[0], where));
    reps.push_back(parse_field<int>(f[1], where));
  });
  require(!pts.empty(), Errc::parse, path + ": no design rows");
  try {
    return Design(std::move(pts), std::move(reps), basis, box);
  } catch (const Error& e) {
    throw Error(Errc::parse, path + ": " + e.what());
  }
}

void write_dataset_csv(std::ostream& out, const Design& design, const Vector& response) {
  require(static_cast<std::size_t>(response.size()) == design.rows(), Errc::dimension_mismatch,
          "dataset length does not match the design");
  out << "row_index,point,response\n";
  const auto entries = design.row_entries();
  for (std::size_t r = 0; r < entries.size(); ++r) {
    out << r << ',' << format_number(design.points()[entries[r]]) << ','
        << format_number(response[static_cast<Eigen::Index>(r)]) << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path) {
  Dataset d;
  std::vector<double> resp;
  read_csv(path, "row_index,point,response", 3, [&](const auto& f, const std::string& where) {
    const auto idx = parse_field<long>(f[0], where);
    require(idx == static_cast<long>(resp.size()), Errc::parse,
            where + ": row_index out of sequence");
    d.points.push_back(parse_field<double>(f[1], where));
    resp.push_back(parse_field<double>(f[2], where));
  });
  d.response = Eigen::Map<const Vector>(resp.data(), static_cast<Eigen::Index>(resp.size()));
  return d;
}

Vector dataset_response(const Dataset& data, const Design& design) {
  require(data.points.size() == design.rows(), Errc::dimension_mismatch,
          "dataset has " + std::to_string(data.points.size()) + " rows, design expects " +
              std::to_string(design.rows()));
  const auto entries = design.row_entries();
  for (std::size_t r = 0; r < entries.size(); ++r) {
    require(data.points[r] == design.points()[entries[r]], Errc::dimension_mismatch,
            "dataset row " + std::to_string(r) + " point does not match the design");
  }
  return data.response;
}

std::string criterion_json(const CriterionEstimate& e) {
  nlohmann::ordered_json j;
  j["criterion"] = e.criterion;
  j["value"] = e.value;
  j["se"] = e.standard_error;
  j["draws"] = e.draws;
  j["seed"] = e.seed;
  return j.dump();
}

}  // namespace tinfo
