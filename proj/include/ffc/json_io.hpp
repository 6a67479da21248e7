#pragma once

#include "ffc/planner.hpp"
#include "ffc/probe.hpp"
#include "ffc/reduction.hpp"
#include "ffc/sindy.hpp"
#include "ffc/stability_map.hpp"

#include <json.hpp>

#include <string>

namespace ffc {

using json = nlohmann::json;

json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::MatrixXd& m);  // array of rows
Eigen::VectorXd vector_from_json(const json& j, const std::string& what);
Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what);

json basis_to_json(const ReducedBasis& basis);
ReducedBasis basis_from_json(const json& j);

/// Library description plus the full coefficient matrix, one entry per library column.
json model_to_json(const SparseModel& model);
SparseModel model_from_json(const json& j);

json schedule_to_json(const ControlSchedule& schedule);
ControlSchedule schedule_from_json(const json& j);

json legs_to_json(const std::vector<LegResult>& legs);
json verification_to_json(const VerificationReport& report);
json controllability_to_json(const ControllabilityReport& report, const StabilityMap& map);
json census_to_json(const RegionCensus& census);
json probe_to_json(const AttractorProbe& probe);

/// Reads a whole file as JSON; ParseError carries the line and column of a syntax error.
json read_json_file(const std::string& path);
/// Two-space indentation, trailing newline.
void write_json_file(const std::string& path, const json& j);

}  // namespace ffc
