#include "ffc/planner.hpp"

#include "ffc/errors.hpp"
#include "ffc/limit_cycles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace ffc {

bool TargetRegion::contains(const Eigen::VectorXd& x) const { return distance(x) <= radius; }

double TargetRegion::distance(const Eigen::VectorXd& x) const {
  if (cloud.empty()) return (x - point).norm();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cloud) best = std::min(best, (x - c).norm());
  return best;
}

namespace {

// Chessboard distance from each cell to the nearest cell with another label; the outside of
// the grid counts as another label. Breadth-first search inside each label's region is exact:
// a straight chessboard path to the nearest foreign cell never leaves the region.
std::vector<int> label_distance(const std::vector<int>& label, const std::vector<int>& dims) {
  const std::size_t n = label.size();
  std::vector<int> dist(n, -1);
  std::vector<int> idx(dims.size());
  auto coords = [&](std::size_t c) {
    for (std::size_t d = 0; d < dims.size(); ++d) {
      idx[d] = static_cast<int>(c % static_cast<std::size_t>(dims[d]));
      c /= static_cast<std::size_t>(dims[d]);
    }
  };
  std::vector<std::vector<int>> offsets{{}};
  for (std::size_t d = 0; d < dims.size(); ++d) {
    std::vector<std::vector<int>> next;
    for (const auto& o : offsets)
      for (int s = -1; s <= 1; ++s) {
        auto e = o;
        e.push_back(s);
        next.push_back(e);
      }
    offsets = std::move(next);
  }
  auto neighbour = [&](const std::vector<int>& at, const std::vector<int>& off) -> long {
    std::size_t c = 0, mul = 1;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      const int v = at[d] + off[d];
      if (v < 0 || v >= dims[d]) return -1;
      c += static_cast<std::size_t>(v) * mul;
      mul *= static_cast<std::size_t>(dims[d]);
    }
    return static_cast<long>(c);
  };
  std::deque<std::size_t> queue;
  for (std::size_t c = 0; c < n; ++c) {
    coords(c);
    const auto at = idx;
    for (const auto& off : offsets) {
      const long m = neighbour(at, off);
      if (m < 0 || label[static_cast<std::size_t>(m)] != label[c]) {
        dist[c] = 1;
        break;
      }
    }
    if (dist[c] == 1) queue.push_back(c);
  }
  while (!queue.empty()) {
    const std::size_t c = queue.front();
    queue.pop_front();
    coords(c);
    const auto at = idx;
    for (const auto& off : offsets) {
      const long m = neighbour(at, off);
      if (m < 0) continue;
      const auto mu = static_cast<std::size_t>(m);
      if (dist[mu] < 0 && label[mu] == label[c]) {
        dist[mu] = dist[c] + 1;
        queue.push_back(mu);
      }
    }
  }
  return dist;
}

double round_up(double t, double dt) { return std::max(dt, std::ceil(t / dt - 1e-9) * dt); }

int stride_for(double dt) { return std::max(1, static_cast<int>(std::lround(0.1 / dt))); }

// Time for the model to enter the region from x under constant u; x advances. -1 past the cap.
double time_to_enter(const PolySystem& model, Eigen::VectorXd& x, const Eigen::VectorXd& u, const TargetRegion& region,
                     double cap, double dt) {
  double t = 0.0;
  while (t < cap) {
    if (region.contains(x)) return t;
    rk4_step(model, x, u, dt);
    t += dt;
    if (!x.allFinite()) return -1.0;
  }
  return region.contains(x) ? t : -1.0;
}

// Time after which the model under u stays in the region (checked for hold + 10 time units).
double time_to_settle(const PolySystem& model, Eigen::VectorXd x, const Eigen::VectorXd& u, const TargetRegion& region,
                      double hold, double cap, double dt) {
  double t = 0.0, entry = region.contains(x) ? 0.0 : -1.0;
  while (t < cap + hold + 10.0) {
    if (entry >= 0.0 && t - entry >= hold + 10.0) return entry;
    rk4_step(model, x, u, dt);
    t += dt;
    if (!x.allFinite()) return -1.0;
    const bool in = region.contains(x);
    if (in && entry < 0.0) entry = t;
    if (!in) entry = -1.0;
    if (entry < 0.0 && t > cap) return -1.0;
  }
  return entry;
}

// Index of the first target the model reaches from x under u, or -1 within the cap.
int lands_on(const PolySystem& model, Eigen::VectorXd x, const Eigen::VectorXd& u, const std::vector<TargetRegion>& targets,
             double cap, double dt) {
  for (double t = 0.0; t <= cap; t += dt) {
    for (std::size_t k = 0; k < targets.size(); ++k)
      if (targets[k].contains(x)) return static_cast<int>(k);
    rk4_step(model, x, u, dt);
    if (!x.allFinite()) return -1;
  }
  return -1;
}

Trajectory run_schedule(const VectorField& field, const ControlSchedule& schedule, const Eigen::VectorXd& x0, double dt,
                        bool& diverged) {
  IntegrateOptions io;
  io.record_derivs = false;
  io.stride = stride_for(dt);
  diverged = false;
  try {
    return integrate(field, x0, schedule, dt, schedule.total_duration(), io);
  } catch (const DivergenceError& e) {
    diverged = true;
    return e.partial();
  }
}

// Replays the segments of one leg from x and checks the leg's end.
bool leg_works(const PolySystem& model, const std::vector<Segment>& segs, const Eigen::VectorXd& x,
               const std::vector<TargetRegion>& targets, double hold, double dt, Eigen::VectorXd& end) {
  ControlSchedule s;
  s.segments = segs;
  bool div = false;
  const auto tr = run_schedule(model, s, x, dt, div);
  if (div) return false;
  const auto legs = evaluate_legs(s, tr, targets, hold);
  end = tr.states.bottomRows(1).transpose();
  return !legs.empty() && legs.back().success;
}

Segment hold_segment(int target, double duration, Eigen::Index r) {
  Segment h;
  h.u = Eigen::VectorXd::Zero(r);
  h.duration = duration;
  h.purpose = SegmentPurpose::Hold;
  h.target = target;
  h.rationale = "hold at u = 0, where the target is a sink";
  return h;
}

}  // namespace

std::vector<TransitionChoice> rank_transitions(const StabilityMap& map, int from, int to) {
  const int na = static_cast<int>(map.attractors.size());
  if (from < 0 || to < 0 || from >= na || to >= na) throw InvalidArgument("attractor index out of range");
  const int bf = map.attractors[static_cast<std::size_t>(from)], bt = map.attractors[static_cast<std::size_t>(to)];
  std::vector<int> label(map.cells.size(), 0);
  for (std::size_t k = 0; k < map.cells.size(); ++k) {
    if (map.cells[k].ambiguous || map.cls(k, bt) != 'A' || map.cls(k, bf) == 'A') continue;
    bool sufficient = true;
    for (int c = 0; c < na && sufficient; ++c)
      if (c != to && map.cls(k, map.attractors[static_cast<std::size_t>(c)]) == 'A') sufficient = false;
    const bool saddle = map.cls(k, bf) == '-';
    label[k] = 1 + (sufficient ? 1 : 0) + (saddle ? 2 : 0);
  }
  const auto dist = label_distance(label, {map.nx, map.ny});
  const double h = std::max((map.upper.x() - map.lower.x()) / std::max(map.nx - 1, 1),
                            (map.upper.y() - map.lower.y()) / std::max(map.ny - 1, 1));
  std::vector<TransitionChoice> out;
  for (std::size_t k = 0; k < map.cells.size(); ++k) {
    if (label[k] == 0) continue;
    TransitionChoice c;
    c.cell = k;
    c.u = map.cells[k].u;
    c.via_saddle_node = label[k] >= 3;
    c.tier = (label[k] - 1) % 2 == 1 ? 2 : 1;
    c.margin = dist[k] * h;
    std::ostringstream why;
    why << "attractor " << to << " is a sink and attractor " << from
        << (c.via_saddle_node ? " is gone (saddle-node)" : " is not a sink") << "; "
        << (c.tier == 2 ? "no other attractor is a sink" : "other attractors remain sinks")
        << "; margin " << c.margin << " (tie-break)";
    c.rationale = why.str();
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(), [](const TransitionChoice& a, const TransitionChoice& b) {
    if (a.via_saddle_node != b.via_saddle_node) return a.via_saddle_node;
    if (a.tier != b.tier) return a.tier > b.tier;
    return a.margin > b.margin;
  });
  return out;
}

TransitionChoice plan_transition(const StabilityMap& map, int from, int to) {
  if (from == to) {
    const int b = map.attractors.at(static_cast<std::size_t>(to));
    std::size_t best = map.cells.size();
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < map.cells.size(); ++k)
      if (map.cls(k, b) == 'A' && map.cells[k].u.norm() < bd) {
        bd = map.cells[k].u.norm();
        best = k;
      }
    if (best == map.cells.size()) throw PlanningError("attractor " + std::to_string(to) + " is a sink nowhere on the map");
    TransitionChoice c;
    c.cell = best;
    c.u = map.cells[best].u;
    c.rationale = "hold: target is already a sink here";
    return c;
  }
  auto all = rank_transitions(map, from, to);
  if (all.empty())
    throw PlanningError("no cell has attractor " + std::to_string(to) + " as a sink while attractor " +
                        std::to_string(from) + " is not (necessary condition fails on all " +
                        std::to_string(map.cells.size()) + " cells)");
  return all.front();
}

std::vector<TargetRegion> map_targets(const StabilityMap& map, double epsilon) {
  std::vector<TargetRegion> out;
  for (int b : map.attractors) out.push_back({map.rest_points[static_cast<std::size_t>(b)], {}, epsilon});
  return out;
}

std::vector<TargetRegion> probe_targets(const AttractorProbe& probe, double epsilon) {
  std::vector<TargetRegion> out;
  for (const auto& a : probe.attractors) {
    if (a.kind == OutcomeKind::FixedPoint) out.push_back({a.point, {}, epsilon});
    else out.push_back({a.point, a.cloud, std::max(epsilon, a.match_radius)});
  }
  return out;
}

ControlSchedule plan_path(const StabilityMap& map, const PolySystem& model, const ObjectivePath& obj,
                          const PlannerOptions& opt) {
  if (obj.targets.empty()) throw InvalidArgument("objective.targets is empty");
  if (model.dim() != 2) throw InvalidArgument("map-based planning needs a planar model");
  const auto targets = map_targets(map, obj.epsilon);
  for (int t : obj.targets)
    if (t < 0 || t >= static_cast<int>(targets.size()))
      throw InvalidArgument("objective target " + std::to_string(t) + " is not an attractor at u = 0");
  ControlSchedule sched;
  sched.safety_factor = opt.safety_factor;
  sched.hold_time = obj.hold;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd x = targets[static_cast<std::size_t>(obj.targets.front())].point;
  if (obj.targets.size() == 1) {
    sched.segments.push_back(hold_segment(obj.targets.front(), round_up(obj.hold, opt.dt), 2));
    return sched;
  }
  for (std::size_t leg = 1; leg < obj.targets.size(); ++leg) {
    const int from = obj.targets[leg - 1], to = obj.targets[leg];
    const auto& goal = targets[static_cast<std::size_t>(to)];
    if (from == to) {
      const double ts = time_to_settle(model, x, zero, goal, obj.hold, opt.horizon_cap, opt.dt);
      if (ts < 0) throw PlanningError("leg " + std::to_string(leg) + ": the model does not settle at the target");
      sched.segments.push_back(hold_segment(to, round_up(opt.safety_factor * ts + obj.hold, opt.dt), 2));
      continue;
    }
    const auto cands = rank_transitions(map, from, to);
    if (cands.empty()) plan_transition(map, from, to);  // throws with the evidence
    std::ostringstream failures;
    bool done = false;
    const int bf = map.attractors[static_cast<std::size_t>(from)], bt = map.attractors[static_cast<std::size_t>(to)];
    int tried = 0, elsewhere = 0;
    for (std::size_t c = 0; c < cands.size() && tried < opt.max_candidates && !done; ++c) {
      const auto& cand = cands[c];
      const auto* to_root = map.root(cand.cell, bt);
      // Cheap filter: the continued target point must lie in the target's basin at u = 0.
      if (lands_on(model, to_root->location, zero, targets, opt.horizon_cap, opt.dt) != to) {
        ++elsewhere;
        continue;
      }
      ++tried;
      const auto* from_root = map.root(cand.cell, bf);
      if (opt.check_cycles && !cand.via_saddle_node && from_root && from_root->region == Region::B) {
        // Hopf-side cell: a stable cycle around the destabilised point would trap the state.
        Eigen::Vector2d lo = from_root->location, hi = from_root->location;
        for (const auto& r : map.cells[cand.cell].roots) {
          lo = lo.cwiseMin(r.location);
          hi = hi.cwiseMax(r.location);
        }
        const Eigen::Vector2d pad = (0.5 * (hi - lo)).cwiseMax(Eigen::Vector2d::Ones());
        std::vector<Eigen::Vector2d> pts;
        for (const auto& r : map.cells[cand.cell].roots) pts.push_back(r.location);
        const auto rep = detect_limit_cycles(model, cand.u, StateBox{lo - pad, hi + pad}, pts);
        bool trapped = false;
        for (const auto& cyc : rep.cycles)
          if (winding_number(cyc.samples, from_root->location) != 0) trapped = true;
        if (trapped) {
          failures << " cell " << cand.cell << ": stable cycle around the source (cycle obstruction);";
          continue;
        }
      }
      const TargetRegion continued{to_root->location, {}, obj.epsilon};
      Eigen::VectorXd xt = x;
      const double tc = time_to_enter(model, xt, cand.u, continued, opt.horizon_cap, opt.dt);
      if (tc < 0) {
        failures << " cell " << cand.cell << ": no convergence within " << opt.horizon_cap
                 << " (an undetected attractor may intervene);";
        continue;
      }
      Segment tr;
      tr.u = cand.u;
      tr.duration = round_up(opt.safety_factor * tc, opt.dt);
      tr.purpose = SegmentPurpose::Transition;
      tr.target = to;
      tr.tier = cand.tier;
      tr.margin = cand.margin;
      tr.via_saddle_node = cand.via_saddle_node;
      tr.rationale = cand.rationale;
      Eigen::VectorXd after = x;
      {
        ControlSchedule one;
        one.segments = {tr};
        bool div = false;
        const auto run = run_schedule(model, one, x, opt.dt, div);
        if (div) continue;
        after = run.states.bottomRows(1).transpose();
      }
      const double ts = time_to_settle(model, after, zero, goal, obj.hold, opt.horizon_cap, opt.dt);
      if (ts < 0) {
        failures << " cell " << cand.cell << ": released state does not settle at the target;";
        continue;
      }
      const Segment hold = hold_segment(to, round_up(opt.safety_factor * ts + obj.hold, opt.dt), 2);
      Eigen::VectorXd end;
      if (!leg_works(model, {tr, hold}, x, targets, obj.hold, opt.dt, end)) {
        failures << " cell " << cand.cell << ": model replay misses the target;";
        continue;
      }
      sched.segments.push_back(tr);
      sched.segments.push_back(hold);
      x = end;
      done = true;
    }
    if (!done)
      throw PlanningError("leg " + std::to_string(leg) + " (" + std::to_string(from) + " -> " + std::to_string(to) +
                          "): no candidate worked; " + std::to_string(elsewhere) + " of " +
                          std::to_string(cands.size()) + " cells continue the target outside its basin at u = 0;" +
                          failures.str());
  }
  return sched;
}

ControlSchedule plan_path_probe(const AttractorProbe& probe, const PolySystem& model, const ObjectivePath& obj,
                                const PlannerOptions& opt) {
  if (obj.targets.empty()) throw InvalidArgument("objective.targets is empty");
  if (model.dim() != 3) throw InvalidArgument("probe-based planning needs a three-dimensional model");
  const auto targets = probe_targets(probe, obj.epsilon);
  const int na = static_cast<int>(targets.size());
  for (int t : obj.targets)
    if (t < 0 || t >= na) throw InvalidArgument("objective target " + std::to_string(t) + " is not a probed attractor");
  ControlSchedule sched;
  sched.safety_factor = opt.safety_factor;
  sched.hold_time = obj.hold;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const auto& first = probe.attractors[static_cast<std::size_t>(obj.targets.front())];
  Eigen::VectorXd x = first.kind == OutcomeKind::FixedPoint ? first.point : first.cloud.front();
  if (obj.targets.size() == 1) {
    sched.segments.push_back(hold_segment(obj.targets.front(), round_up(obj.hold, opt.dt), 3));
    return sched;
  }
  const int n = probe.per_axis;
  for (std::size_t leg = 1; leg < obj.targets.size(); ++leg) {
    const int from = obj.targets[leg - 1], to = obj.targets[leg];
    const auto& goal = targets[static_cast<std::size_t>(to)];
    if (from == to) {
      const double ts = time_to_settle(model, x, zero, goal, obj.hold, opt.horizon_cap, opt.dt);
      if (ts < 0) throw PlanningError("leg " + std::to_string(leg) + ": the model does not settle at the target");
      sched.segments.push_back(hold_segment(to, round_up(opt.safety_factor * ts + obj.hold, opt.dt), 3));
      continue;
    }
    std::vector<int> label(probe.nodes.size(), 0);
    for (std::size_t k = 0; k < probe.nodes.size(); ++k) {
      const auto& nd = probe.nodes[k];
      if (nd.release[static_cast<std::size_t>(from)] != to) continue;
      label[k] = nd.under[static_cast<std::size_t>(from)] == OutcomeKind::FixedPoint ? 2 : 1;
    }
    const auto dist = label_distance(label, {n, n, n});
    std::vector<std::size_t> cands;
    for (std::size_t k = 0; k < label.size(); ++k)
      if (label[k]) cands.push_back(k);
    if (cands.empty())
      throw PlanningError("leg " + std::to_string(leg) + ": no probed control releases attractor " +
                          std::to_string(from) + " into attractor " + std::to_string(to));
    std::stable_sort(cands.begin(), cands.end(), [&](std::size_t a, std::size_t b) {
      if (label[a] != label[b]) return label[a] > label[b];
      return dist[a] > dist[b];
    });
    const double h = (probe.upper - probe.lower).maxCoeff() / std::max(n - 1, 1);
    std::ostringstream failures;
    bool done = false;
    for (std::size_t c = 0; c < cands.size() && static_cast<int>(c) < opt.max_candidates && !done; ++c) {
      const auto& nd = probe.nodes[cands[c]];
      const double settle = nd.settle_time[static_cast<std::size_t>(from)];
      Segment tr;
      tr.u = nd.u;
      tr.duration = round_up(label[cands[c]] == 2 ? std::max(opt.safety_factor * settle, 1.0) : settle, opt.dt);
      tr.purpose = SegmentPurpose::Transition;
      tr.target = to;
      tr.tier = label[cands[c]];
      tr.margin = dist[cands[c]] * h;
      std::ostringstream why;
      why << "probe: from attractor " << from << " this control "
          << (tr.tier == 2 ? "settles on a fixed point" : "gives a non-fixed outcome")
          << " and release reaches attractor " << to << "; margin " << tr.margin << " (tie-break)";
      tr.rationale = why.str();
      Eigen::VectorXd after = x;
      {
        ControlSchedule one;
        one.segments = {tr};
        bool div = false;
        const auto run = run_schedule(model, one, x, opt.dt, div);
        if (div) continue;
        after = run.states.bottomRows(1).transpose();
      }
      const double ts = time_to_settle(model, after, zero, goal, obj.hold, opt.horizon_cap, opt.dt);
      if (ts < 0) {
        failures << " node " << cands[c] << ": released state does not settle at the target;";
        continue;
      }
      const Segment hold = hold_segment(to, round_up(opt.safety_factor * ts + obj.hold, opt.dt), 3);
      Eigen::VectorXd end;
      if (!leg_works(model, {tr, hold}, x, targets, obj.hold, opt.dt, end)) {
        failures << " node " << cands[c] << ": model replay misses the target;";
        continue;
      }
      sched.segments.push_back(tr);
      sched.segments.push_back(hold);
      x = end;
      done = true;
    }
    if (!done)
      throw PlanningError("leg " + std::to_string(leg) + " (" + std::to_string(from) + " -> " + std::to_string(to) +
                          "): no candidate worked;" + failures.str());
  }
  return sched;
}

std::vector<LegResult> evaluate_legs(const ControlSchedule& schedule, const Trajectory& tr,
                                     const std::vector<TargetRegion>& targets, double hold) {
  std::vector<LegResult> legs;
  double t = 0.0, start = 0.0;
  const double tol = 1e-6;
  for (const auto& seg : schedule.segments) {
    t += seg.duration;
    if (seg.purpose != SegmentPurpose::Hold) continue;
    LegResult leg;
    leg.target = seg.target;
    leg.start = start;
    leg.end = t;
    start = t;
    if (seg.target < 0 || seg.target >= static_cast<int>(targets.size())) {
      legs.push_back(leg);
      continue;
    }
    const auto& region = targets[static_cast<std::size_t>(seg.target)];
    // Last sample at or before the leg end; the run may have stopped early.
    Eigen::Index last = -1;
    for (Eigen::Index i = 0; i < tr.samples(); ++i)
      if (tr.times[i] <= t + tol) last = i;
    if (last < 0 || tr.times[last] < t - 0.2 - tol) {
      leg.final_distance = std::numeric_limits<double>::infinity();
      legs.push_back(leg);
      continue;
    }
    leg.final_distance = region.distance(tr.states.row(last).transpose());
    double since = tr.times[last];
    for (Eigen::Index i = last; i >= 0 && tr.times[i] >= leg.start - tol; --i) {
      if (!region.contains(tr.states.row(i).transpose())) break;
      since = tr.times[i];
    }
    leg.held = region.contains(tr.states.row(last).transpose()) ? tr.times[last] - since : 0.0;
    leg.success = leg.held >= hold - tol;
    legs.push_back(leg);
  }
  return legs;
}

bool ReplayResult::all_succeeded() const {
  return !diverged && !legs.empty() && std::all_of(legs.begin(), legs.end(), [](const LegResult& l) { return l.success; });
}

ReplayResult replay(const PolySystem& model, const ControlSchedule& schedule, const Eigen::VectorXd& z0,
                    const std::vector<TargetRegion>& targets, double hold, double dt) {
  ReplayResult r;
  r.trajectory = run_schedule(model, schedule, z0, dt, r.diverged);
  r.legs = evaluate_legs(schedule, r.trajectory, targets, hold);
  return r;
}

bool VerificationReport::all_succeeded() const {
  return !diverged && !legs.empty() && std::all_of(legs.begin(), legs.end(), [](const LegResult& l) { return l.success; });
}

VerificationReport execute_and_verify(const VectorField& full, const ReducedBasis& basis, const PolySystem& model,
                                      const ControlSchedule& schedule, const Eigen::VectorXd& x0,
                                      const std::vector<TargetRegion>& targets, double hold, double dt) {
  if (static_cast<Eigen::Index>(full.dim()) != basis.n()) throw InvalidArgument("basis does not match the full system");
  VerificationReport rep;
  ControlSchedule lifted = schedule;
  for (auto& s : lifted.segments)
    if (!s.lifted) s.lifted = lift_control(basis, s.u);
  const Eigen::VectorXd z0 = project(basis, x0);
  bool div = false;
  rep.predicted = run_schedule(model, lifted, z0, dt, div);
  const auto actual = run_schedule(full, lifted, x0, dt, rep.diverged);
  rep.actual = project(basis, actual);
  rep.legs = evaluate_legs(lifted, rep.actual, targets, hold);
  const Eigen::Index m = std::min(rep.predicted.samples(), rep.actual.samples());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double e = (rep.predicted.states.row(i) - rep.actual.states.row(i)).norm();
    rep.max_tracking_error = std::max(rep.max_tracking_error, e);
    sum += e * e;
  }
  rep.rms_tracking_error = m > 0 ? std::sqrt(sum / static_cast<double>(m)) : 0.0;
  rep.note = rep.diverged ? "full system diverged during execution; partial data kept"
                          : "the model only approximates the full dynamics, so the paths are expected to differ";
  return rep;
}

}  // namespace ffc
