#pragma once

#include "ffc/fixed_points.hpp"
#include "ffc/poly_system.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ffc {

enum class OutcomeKind { FixedPoint, Periodic, AperiodicBounded, Diverged };

std::string to_string(OutcomeKind k);
OutcomeKind outcome_kind_from_string(const std::string& s);

struct ProbeOptions {
  int per_axis = 7;            // control grid nodes per axis
  double dt = 0.01;
  double horizon = 60.0;       // under the probe control
  double release_horizon = 60.0;  // after switching back to u = 0
  int cloud_seeds = 4;         // starts taken from a non-fixed attractor's sample cloud
  double settle_radius = 0.02; // settle time: last entry into this ball around the limit
  double bound = 1e3;
  int fixed_point_grid = 6;    // Newton seeds per axis for the per-node census; 0 skips it
  int discovery_grid = 4;      // starts per axis at u = 0 looking for non-fixed attractors
  Eigen::VectorXd box_lower, box_upper;  // state box for fixed points and discovery starts
  int workers = 1;
};

/// Attractor of the uncontrolled model. Non-fixed attractors carry a cloud of samples from a
/// long run; a state is on them when it comes within `match_radius` of that cloud.
struct RestAttractor {
  OutcomeKind kind = OutcomeKind::FixedPoint;
  Eigen::VectorXd point;
  std::vector<Eigen::VectorXd> cloud;
  double match_radius = 0.0;
};

/// Result of one run: the kind of long-time behaviour, the limit (fixed point) or final
/// state, and the time after which the run stayed within settle_radius of its limit.
struct RunOutcome {
  OutcomeKind kind = OutcomeKind::Diverged;
  Eigen::VectorXd end;
  double settle_time = 0.0;
  std::vector<Eigen::VectorXd> tail;  // second-half samples, every 10 steps
};

RunOutcome classify_run(const PolySystem& sys, const Eigen::VectorXd& u, const Eigen::VectorXd& x0,
                        double horizon, const ProbeOptions& options);

/// Index of the rest attractor a run ended on, or -1.
int identify_attractor(const std::vector<RestAttractor>& attractors, const RunOutcome& run);

struct ProbeNode {
  Eigen::VectorXd u;
  std::vector<FixedPointRecord> fixed_points;
  // Per rest attractor a: behaviour under u started from a, and where the state goes after
  // u is switched off. release[a] is -1 when the starts disagree or reach no rest attractor.
  std::vector<OutcomeKind> under;
  std::vector<double> settle_time;  // longest settle time under u over the starts
  std::vector<int> release;
  std::vector<double> release_time;  // longest settle time after release
};

struct AttractorProbe {
  Eigen::VectorXd lower, upper;
  int per_axis = 0;
  std::vector<RestAttractor> attractors;
  std::vector<FixedPointRecord> rest_fixed_points;
  std::vector<ProbeNode> nodes;  // index (k * per_axis + j) * per_axis + i

  Eigen::VectorXd control(int i, int j, int k) const;
};

/// Experimental control-to-outcome table for a three-dimensional model.
AttractorProbe probe_attractors(const PolySystem& sys, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                const ProbeOptions& options);

}  // namespace ffc
