#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "testinfo/criteria.hpp"
#include "testinfo/models.hpp"

namespace tinfo {

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

// `point,replications`
void write_design_csv(std::ostream& out, const Design& design);
Design read_design_csv(const std::string& path, Basis basis, Box box = {});

// `row_index,point,response`, one line per expanded design row.
void write_dataset_csv(std::ostream& out, const Design& design, const Vector& response);

struct Dataset {
  std::vector<double> points;  // per row
  Vector response;
};

Dataset read_dataset_csv(const std::string& path);

// Response vector for `design`, checking that row points match it in order.
Vector dataset_response(const Dataset& data, const Design& design);

// `{"criterion":..,"value":..,"se":..,"draws":..,"seed":..}`
std::string criterion_json(const CriterionEstimate& e);

}  // namespace tinfo
