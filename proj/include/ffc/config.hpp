#pragma once

#include "ffc/json_io.hpp"
#include "ffc/planner.hpp"
#include "ffc/probe.hpp"
#include "ffc/sindy.hpp"
#include "ffc/systems.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ffc {

struct EnsembleConfig {
  int count = 40;
  double dt = 0.01;
  double horizon = 10.0;
  int stride = 1;
  Eigen::VectorXd lower, upper;  // sampler box; subspace coordinates when the system has one
  double noise = 0.1;
};

struct AnalysisConfig {
  Eigen::VectorXd lower, upper;  // control box, length = rank
  int resolution = 128;
  int cycle_grid = 16;
  double curve_t0 = -40.0, curve_t1 = 40.0;
  int curve_samples = 2001;
  Eigen::VectorXd state_lower, state_upper;  // state box for fixed points and 3D discovery
  ProbeOptions probe;
};

/// `reference` "model": targets index the model's sinks at u = 0 (sorted, or probe order in 3D).
/// "truth": targets index the generator's known attractors, matched to the nearest model sink.
struct ObjectiveConfig {
  std::vector<int> targets;
  std::string reference = "model";
  double epsilon = 0.1;
  double hold = 5.0;
};

struct Fig1Config {
  std::vector<int> sizes{4, 6, 10, 20};
  std::vector<double> densities{0.1, 1.0};
  int trials = 100;
  VarianceExperimentOptions options;
};

struct PipelineConfig {
  std::optional<SystemSpec> system;  // generated source
  std::vector<std::string> csv;      // ingested source: trajectory CSV files
  bool seed_in_system = false;       // system.seed given explicitly
  EnsembleConfig ensemble;
  int rank = 2;
  bool centering = false;
  double reduction_skip_time = 0.0;
  SindyOptions sindy;
  bool closed_form_model = false;  // fit stage writes the generator's exact polynomial
  AnalysisConfig analysis;
  ObjectiveConfig objective;
  PlannerOptions planner;
  double execute_dt = 0.01;
  std::string output = "ffc_run";
  std::uint64_t seed = 0;
  int workers = 1;
  Fig1Config fig1;
};

/// Validates every key; unknown keys and out-of-range values raise InvalidArgument naming the key.
PipelineConfig parse_config(const json& j);
/// Fully resolved configuration, defaults included.
json config_to_json(const PipelineConfig& c);
/// Sets the run seed; the system seed follows unless the config fixed it.
void apply_seed(PipelineConfig& c, std::uint64_t seed);
/// Text listing every accepted key.
std::string config_help();

}  // namespace ffc
