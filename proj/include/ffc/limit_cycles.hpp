#pragma once

#include "ffc/fixed_points.hpp"
#include "ffc/poly_system.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace ffc {

/// Poincare-Bendixson witness. The section is the horizontal ray from `center` towards +x.
/// The outer curve is the orbit arc from outer_start to its first return outer_return plus the
/// section segment between them; the flow crosses that segment into the enclosed region. The
/// inner curve is built the same way from inside the cycle and the flow leaves it across its
/// segment. The annulus between the two curves holds no fixed point.
struct TrappingCertificate {
  Eigen::Vector2d center;
  double outer_start = 0.0, outer_return = 0.0;  // x coordinates on the section
  double inner_start = 0.0, inner_return = 0.0;
  double min_section_flux = 0.0;  // smallest |normal flow| over the sampled section segments
  std::vector<Eigen::Vector2d> outer, inner;
};

struct LimitCycle {
  std::vector<Eigen::Vector2d> samples;  // one period at uniform time spacing
  double period = 0.0;
  std::vector<Eigen::Vector2d> enclosed;  // fixed points with nonzero winding number
  std::optional<TrappingCertificate> certificate;
};

struct CycleOptions {
  int ring = 8;                 // seeds on a ring around each source
  double ring_radius = 1e-2;    // relative to max(1, |source|)
  bool corners = true;          // also seed from the box corners
  double chunk = 20.0;          // integration time between convergence checks
  double horizon = 400.0;       // per seed
  double recurrence_tol = 1e-4; // crossing convergence, relative to the state scale
  double rtol = 1e-9;
  int period_samples = 512;
};

struct CycleReport {
  std::vector<LimitCycle> cycles;
  std::vector<FixedPointRecord> fixed_points;
  bool undetermined = false;  // some seed neither settled nor recurred within the horizon
  int seeds = 0;
};

/// Numeric detection of stable cycles of F + u. Seeds start on rings around sources inside the
/// box and at the box corners; only cycles enclosing at least one fixed point are returned.
CycleReport detect_limit_cycles(const PolySystem& sys, const Eigen::Vector2d& u, const StateBox& box,
                                const CycleOptions& options = {});
/// Same, with fixed points supplied by the caller (for example from a PlanarSolver).
CycleReport detect_limit_cycles(const PolySystem& sys, const Eigen::Vector2d& u, const StateBox& box,
                                const std::vector<Eigen::Vector2d>& fixed_points, const CycleOptions& options = {});

/// Winding number of a closed polygon around a point.
int winding_number(const std::vector<Eigen::Vector2d>& polygon, const Eigen::Vector2d& p);

enum class InfinityBehaviour { Inward, Outward, Mixed };
std::string to_string(InfinityBehaviour b);

struct GlobalStabilityOptions {
  double radius = 1e-3;  // circle in the hatted plane
  int samples = 64;
  int max_steps = 4000;
};

/// Direction of the flow at infinity. Follows the direction-normalised hatted flow from each
/// off-axis sample on the circle: moving away from the hatted origin means the original flow
/// comes in from infinity. All away gives Inward, all toward gives Outward.
InfinityBehaviour global_stability(const PolySystem& sys, const Eigen::Vector2d& u,
                                   const GlobalStabilityOptions& options = {});

struct DulacCertificate {
  std::string multiplier;
  int sign = 0;        // sign of div(g (F + u)) over the region
  double margin = 0.0; // smallest |div| on the grid
};

struct Rect {
  double x0, x1, y0, y1;
};

/// Family names: "1", "1/x", "1/y", "1/(xy)", "exp(x)", "exp(-x)", "exp(y)", "exp(-y)".
/// An empty family means all of them, tried in that order.
std::optional<DulacCertificate> dulac_no_cycle_region(const PolySystem& sys, const Eigen::Vector2d& u,
                                                      const Rect& region, const std::vector<std::string>& family = {},
                                                      int grid = 200);

}  // namespace ffc
