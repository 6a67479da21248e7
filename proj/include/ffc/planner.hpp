#pragma once

#include "ffc/poly_system.hpp"
#include "ffc/probe.hpp"
#include "ffc/reduction.hpp"
#include "ffc/schedule.hpp"
#include "ffc/simulation.hpp"
#include "ffc/stability_map.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ffc {

/// Ordered attractor visits. The first target is where the system starts.
struct ObjectivePath {
  std::vector<int> targets;
  double epsilon = 0.1;  // reduced-space radius
  double hold = 5.0;     // consecutive time within epsilon at the end of each leg
};

struct PlannerOptions {
  double safety_factor = 1.5;
  double horizon_cap = 500.0;
  double dt = 0.01;
  int max_candidates = 25;  // candidates simulated per leg before giving up
  bool check_cycles = true;
};

/// Where a leg must end: a point (fixed attractor) or a sampled set (non-fixed attractor).
struct TargetRegion {
  Eigen::VectorXd point;
  std::vector<Eigen::VectorXd> cloud;
  double radius = 0.1;
  bool contains(const Eigen::VectorXd& x) const;
  double distance(const Eigen::VectorXd& x) const;
};

struct TransitionChoice {
  std::size_t cell = 0;
  Eigen::VectorXd u;
  int tier = 0;  // 0 hold, 1 necessary only, 2 sufficient
  bool via_saddle_node = false;
  double margin = 0.0;  // Chebyshev distance in control units to a cell of another candidate class
  std::string rationale;
};

/// Candidate cells for moving from attractor `from` to attractor `to` (indices into
/// map.attractors), best first: saddle-node cells, then sufficient cells, then larger margin.
std::vector<TransitionChoice> rank_transitions(const StabilityMap& map, int from, int to);
/// Best candidate; throws PlanningError with the evidence when the necessary set is empty.
TransitionChoice plan_transition(const StabilityMap& map, int from, int to);

/// Transition and hold segments for every leg, timed by simulating the model.
ControlSchedule plan_path(const StabilityMap& map, const PolySystem& model, const ObjectivePath& objective,
                          const PlannerOptions& options = {});

/// Three-dimensional planning from a probe table; targets index probe.attractors.
ControlSchedule plan_path_probe(const AttractorProbe& probe, const PolySystem& model, const ObjectivePath& objective,
                                const PlannerOptions& options = {});

std::vector<TargetRegion> map_targets(const StabilityMap& map, double epsilon);
std::vector<TargetRegion> probe_targets(const AttractorProbe& probe, double epsilon);

struct LegResult {
  int target = -1;
  bool success = false;
  double start = 0.0, end = 0.0;
  double final_distance = 0.0;
  double held = 0.0;  // length of the final stretch spent inside the target region
};

/// A leg is a run of segments closed by a hold segment.
std::vector<LegResult> evaluate_legs(const ControlSchedule& schedule, const Trajectory& reduced,
                                     const std::vector<TargetRegion>& targets, double hold);

struct ReplayResult {
  Trajectory trajectory;
  std::vector<LegResult> legs;
  bool diverged = false;
  bool all_succeeded() const;
};

/// Runs the schedule on the model itself.
ReplayResult replay(const PolySystem& model, const ControlSchedule& schedule, const Eigen::VectorXd& z0,
                    const std::vector<TargetRegion>& targets, double hold, double dt = 0.01);

struct VerificationReport {
  std::vector<LegResult> legs;
  Trajectory predicted;  // model replay, reduced coordinates
  Trajectory actual;     // full run projected onto the basis
  double max_tracking_error = 0.0;
  double rms_tracking_error = 0.0;
  bool diverged = false;
  std::string note;
  bool all_succeeded() const;
};

/// Integrates the full system under the lifted schedule and checks every leg in reduced space.
VerificationReport execute_and_verify(const VectorField& full, const ReducedBasis& basis, const PolySystem& model,
                                      const ControlSchedule& schedule, const Eigen::VectorXd& x0,
                                      const std::vector<TargetRegion>& targets, double hold, double dt = 0.01);

}  // namespace ffc
