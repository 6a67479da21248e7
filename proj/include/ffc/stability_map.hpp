#pragma once

#include "ffc/bifurcation.hpp"
#include "ffc/fixed_points.hpp"
#include "ffc/limit_cycles.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace ffc {

struct MapRoot {
  Eigen::Vector2d location;
  Region region = Region::A;
  double trace = 0.0, det = 0.0;
  bool borderline = false;
  int branch = -1;
};

struct MapCell {
  Eigen::Vector2d u;
  std::vector<MapRoot> roots;  // sorted lexicographically
  bool ambiguous = false;
  bool newton_fallback = false;  // elimination degenerated; roots from Newton seeding in the fallback box
  int cycles = -1;               // -1 not probed; otherwise number of stable cycles found
  bool cycle_undetermined = false;
};

struct MapOptions {
  int resolution = 256;  // nodes per axis
  int cycle_grid = 16;   // coarse nodes per axis probed for cycles; 0 disables
  int workers = 1;
  CycleOptions cycle = {4, 1e-2, true, 20.0, 200.0, 1e-4, 1e-8, 256};
  StateBox fallback_box{Eigen::Vector2d(-10, -10), Eigen::Vector2d(10, 10)};
};

/// Grid over a control-plane rectangle with per-node fixed points, continued branch labels,
/// and cycle flags on a coarse sub-grid.
///
/// Branch ids: the fixed points at u = 0, sorted lexicographically, are branches 0..k-1.
/// Labels spread from the node nearest u = 0 by nearest-root matching between 4-neighbours;
/// roots matched by no labelled neighbour start new branches. A node whose neighbours
/// disagree, or where an equal root count fails to match, is ambiguous.
struct StabilityMap {
  Eigen::Vector2d lower, upper;
  int nx = 0, ny = 0;
  std::vector<MapCell> cells;  // index j * nx + i, i along u1
  std::size_t anchor = 0;
  std::vector<Eigen::Vector2d> rest_points;  // fixed points at u = 0
  std::vector<int> attractors;               // branch ids that are sinks at u = 0
  int branch_count = 0;

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i); }
  Eigen::Vector2d control(int i, int j) const;
  double cell_diagonal() const;
  /// 'A', 'B', 'C', 'D', '-' (absent) or '?' (ambiguous).
  char cls(std::size_t cell, int branch) const;
  const MapRoot* root(std::size_t cell, int branch) const;
  std::vector<std::size_t> region_set(int branch, char cls) const;
  /// Cell nearest to a control value.
  std::size_t nearest(const Eigen::Vector2d& u) const;
};

StabilityMap stability_map(const PolySystem& sys, const Eigen::Vector2d& lower, const Eigen::Vector2d& upper,
                           const MapOptions& options = {});

/// u1, u2, branch_id, class (one row per node and branch).
void write_regions_csv(std::ostream& os, const StabilityMap& map);
/// u1, u2, sinks, sources, cycles, undetermined (probed nodes only).
void write_cycles_csv(std::ostream& os, const StabilityMap& map);

/// Qualitative node types by number of sinks and detected cycles. Nodes whose cycle status is
/// unknown (not probed but holding a source, or an undetermined search) count as other.
struct RegionCensus {
  std::size_t two_sinks = 0, one_sink = 0, sink_and_cycle = 0, cycle_only = 0, other = 0;
};

RegionCensus region_census(const StabilityMap& map);

struct PairEntry {
  int from = 0, to = 0;  // attractor indices
  bool necessary = false, sufficient = false;
  std::size_t necessary_count = 0, sufficient_count = 0;
  std::vector<std::size_t> necessary_witness, sufficient_witness;  // first cells, up to 16
};

struct ControllabilityReport {
  std::vector<int> attractor_branches;
  std::vector<PairEntry> pairs;
  bool all_necessary = true;
  bool all_sufficient = true;
  bool reach_any = true;  // every attractor reaches every other through necessary moves
  std::vector<std::vector<int>> reachable;  // per attractor, attractor indices reachable
  const PairEntry* find(int from, int to) const;
};

ControllabilityReport controllability_report(const StabilityMap& map);

struct AgreementResult {
  std::size_t edges = 0;        // class-change edges examined
  std::size_t folds = 0;        // explained by a root count change of two
  std::size_t near_curve = 0;   // explained by a validated curve within one cell diagonal
  std::vector<std::pair<std::size_t, std::size_t>> unexplained;
};

/// Checks that every class change between neighbouring non-ambiguous nodes sits on a fold or
/// within one cell diagonal of a validated curve.
AgreementResult curve_agreement(const StabilityMap& map, const std::vector<BifurcationCurve>& curves);

}  // namespace ffc
