#include "doctest.h"

#include "ffc/errors.hpp"
#include "ffc/planner.hpp"
#include "ffc/systems.hpp"

using namespace ffc;

namespace {

const StabilityMap& chem_map() {
  static const StabilityMap map = [] {
    MapOptions o;
    o.resolution = 128;
    o.cycle_grid = 16;
    return stability_map(bistable_chem(), Eigen::Vector2d(-200, -200), Eigen::Vector2d(200, 200), o);
  }();
  return map;
}

}  // namespace

TEST_CASE("chem round trip plans four segments and the model replay succeeds") {
  const auto& map = chem_map();
  REQUIRE(map.attractors.size() == 2);
  const auto chem = bistable_chem();
  ObjectivePath obj;
  obj.targets = {0, 1, 0};
  const auto sched = plan_path(map, chem, obj);
  REQUIRE(sched.segments.size() == 4);
  CHECK(sched.segments[0].purpose == SegmentPurpose::Transition);
  CHECK(sched.segments[1].purpose == SegmentPurpose::Hold);
  CHECK(sched.segments[1].target == 1);
  CHECK(sched.segments[3].target == 0);
  CHECK(sched.segments[1].u.norm() == 0.0);
  const auto targets = map_targets(map, obj.epsilon);
  const auto rep = replay(chem, sched, targets[0].point, targets, obj.hold);
  CHECK(rep.all_succeeded());
  REQUIRE(rep.legs.size() == 2);
  for (const auto& leg : rep.legs) CHECK(leg.held >= obj.hold);
}

TEST_CASE("single target gives one hold segment") {
  ObjectivePath obj;
  obj.targets = {1};
  const auto sched = plan_path(chem_map(), bistable_chem(), obj);
  REQUIRE(sched.segments.size() == 1);
  CHECK(sched.segments[0].purpose == SegmentPurpose::Hold);
  CHECK(sched.segments[0].duration >= obj.hold);
}

TEST_CASE("transition choices respect the tier order and take the widest margin") {
  const auto& map = chem_map();
  for (int from = 0; from < 2; ++from) {
    const int to = 1 - from;
    const auto all = rank_transitions(map, from, to);
    REQUIRE_FALSE(all.empty());
    const int bt = map.attractors[static_cast<std::size_t>(to)], bf = map.attractors[static_cast<std::size_t>(from)];
    for (const auto& c : all) {
      CHECK(map.cls(c.cell, bt) == 'A');
      CHECK(map.cls(c.cell, bf) != 'A');
      CHECK(c.via_saddle_node == (map.cls(c.cell, bf) == '-'));
      CHECK(c.margin > 0.0);
    }
    for (std::size_t i = 1; i < all.size(); ++i) {
      const auto& a = all[i - 1];
      const auto& b = all[i];
      const bool ordered = a.via_saddle_node > b.via_saddle_node ||
                           (a.via_saddle_node == b.via_saddle_node &&
                            (a.tier > b.tier || (a.tier == b.tier && a.margin >= b.margin)));
      CHECK(ordered);
    }
    const auto best = plan_transition(map, from, to);
    CHECK(best.cell == all.front().cell);
    for (const auto& c : all)
      if (c.via_saddle_node == best.via_saddle_node && c.tier == best.tier) CHECK(c.margin <= best.margin);
  }
}

TEST_CASE("planning is deterministic") {
  ObjectivePath obj;
  obj.targets = {0, 1, 0, 1};
  const auto a = plan_path(chem_map(), bistable_chem(), obj);
  const auto b = plan_path(chem_map(), bistable_chem(), obj);
  REQUIRE(a.segments.size() == b.segments.size());
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    CHECK(a.segments[i].u == b.segments[i].u);
    CHECK(a.segments[i].duration == b.segments[i].duration);
  }
}

TEST_CASE("no candidate cells raises a planning error") {
  PolySystem lin({Polynomial::monomial(-1.0, {1, 0}), Polynomial::monomial(-1.0, {0, 1})});
  MapOptions o;
  o.resolution = 16;
  const auto map = stability_map(lin, Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1), o);
  REQUIRE(map.attractors.size() == 1);
  CHECK_THROWS_AS(rank_transitions(map, 0, 1), InvalidArgument);
  ObjectivePath obj;
  obj.targets = {0, 2};
  CHECK_THROWS_AS(plan_path(map, lin, obj), InvalidArgument);
}

TEST_CASE("hold on an exact model verifies against the full system") {
  // A two-dimensional linear sink embedded in R^4 with a decaying complement.
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(4, 2);
  std::vector<Polynomial> comps;
  for (int i = 0; i < 4; ++i) {
    std::vector<int> e(4, 0);
    e[static_cast<std::size_t>(i)] = 1;
    comps.push_back(Polynomial::monomial(-1.0, e));
  }
  PolySystem full(comps);
  PolySystem model({Polynomial::monomial(-1.0, {1, 0}), Polynomial::monomial(-1.0, {0, 1})});
  ReducedBasis basis;
  basis.modes = q;
  basis.singular_values = Eigen::VectorXd::Ones(2);
  ControlSchedule s;
  Segment h;
  h.u = Eigen::VectorXd::Zero(2);
  h.duration = 10.0;
  h.purpose = SegmentPurpose::Hold;
  h.target = 0;
  s.segments = {h};
  Eigen::VectorXd x0(4);
  x0 << 0.05, 0.0, 1.0, -1.0;
  const std::vector<TargetRegion> targets{{Eigen::VectorXd::Zero(2), {}, 0.1}};
  const auto rep = execute_and_verify(full, basis, model, s, x0, targets, 5.0);
  CHECK(rep.all_succeeded());
  CHECK(rep.max_tracking_error < 1e-6);
}
