#include "ffc/probe.hpp"

#include "ffc/errors.hpp"
#include "ffc/parallel.hpp"
#include "ffc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ffc {

std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::FixedPoint: return "fixed_point";
    case OutcomeKind::Periodic: return "periodic";
    case OutcomeKind::AperiodicBounded: return "aperiodic_bounded";
    case OutcomeKind::Diverged: return "diverged";
  }
  return "?";
}

OutcomeKind outcome_kind_from_string(const std::string& s) {
  for (auto k : {OutcomeKind::FixedPoint, OutcomeKind::Periodic, OutcomeKind::AperiodicBounded, OutcomeKind::Diverged})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown outcome kind '" + s + "'");
}

Eigen::VectorXd AttractorProbe::control(int i, int j, int k) const {
  Eigen::VectorXd u(3);
  const int idx[3] = {i, j, k};
  for (int d = 0; d < 3; ++d)
    u[d] = per_axis > 1 ? lower[d] + (upper[d] - lower[d]) * idx[d] / (per_axis - 1) : lower[d];
  return u;
}

namespace {

constexpr int kStride = 10;

double extent(const std::vector<Eigen::VectorXd>& pts) {
  if (pts.empty()) return 0.0;
  Eigen::VectorXd lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

// Returns to the final state at a steady spacing mark a periodic orbit.
bool recurrent(const std::vector<double>& t, const std::vector<Eigen::VectorXd>& x, double speed, double dt) {
  const std::size_t n = x.size();
  if (n < 8) return false;
  const Eigen::VectorXd& end = x.back();
  const double tol = std::max(1e-3, 2e-2 * extent(x)) + speed * kStride * dt;
  std::vector<double> returns;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (t.back() - t[i] < 1.0) break;
    const double d = (x[i] - end).norm();
    if (d < tol && d <= (x[i - 1] - end).norm() && d <= (x[i + 1] - end).norm()) returns.push_back(t[i]);
  }
  if (returns.size() < 2) return false;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < returns.size(); ++i) gaps.push_back(returns[i] - returns[i - 1]);
  gaps.push_back(t.back() - returns.back());
  for (double g : gaps)
    if (std::abs(g - gaps.back()) > 0.05 * gaps.back() + 2 * kStride * dt) return false;
  return true;
}

}  // namespace

RunOutcome classify_run(const PolySystem& sys, const Eigen::VectorXd& u, const Eigen::VectorXd& x0, double horizon,
                        const ProbeOptions& opt) {
  RunOutcome out;
  Eigen::VectorXd x = x0, f;
  std::vector<double> ts{0.0};
  std::vector<Eigen::VectorXd> xs{x0};
  const auto steps = static_cast<long>(std::ceil(horizon / opt.dt));
  double t = 0.0;
  bool at_rest = false;
  for (long s = 1; s <= steps && !at_rest; ++s) {
    rk4_step(sys, x, u, opt.dt);
    t = s * opt.dt;
    if (!x.allFinite() || x.norm() > opt.bound) {
      out.kind = OutcomeKind::Diverged;
      out.end = x;
      out.settle_time = t;
      return out;
    }
    if (s % kStride == 0) {
      ts.push_back(t);
      xs.push_back(x);
      sys.evaluate(x, f);
      at_rest = (f + u).norm() < 1e-9 * std::max(1.0, x.norm());
    }
  }
  sys.evaluate(x, f);
  const double speed = (f + u).norm();
  Eigen::VectorXd xs_limit = x;
  const bool converged = newton_solve(sys, u, xs_limit);
  const bool attracting = converged && make_record(sys, xs_limit, u).region == Region::A;
  // A run that came to rest on a non-attracting point (an invariant symmetry line, say) is
  // still a fixed-point outcome; identify_attractor then finds no rest attractor for it.
  if (converged && (xs_limit - x).norm() < opt.settle_radius && (at_rest || attracting)) {
    out.kind = OutcomeKind::FixedPoint;
    out.end = xs_limit;
    out.settle_time = 0.0;
    for (std::size_t i = xs.size(); i-- > 0;)
      if ((xs[i] - xs_limit).norm() > opt.settle_radius) {
        out.settle_time = i + 1 < ts.size() ? ts[i + 1] : t;
        break;
      }
    out.tail = {xs_limit};
    return out;
  }
  // Weakly damped foci: still outside the settle ball, but the distance envelope to a stable
  // point shrinks quarter by quarter over the second half.
  if (attracting && xs.size() >= 16) {
    const std::size_t h = xs.size() / 2, q = (xs.size() - h) / 4;
    double env[4] = {0, 0, 0, 0};
    for (std::size_t i = h; i < h + 4 * q; ++i) {
      auto& e = env[(i - h) / q];
      e = std::max(e, (xs[i] - xs_limit).norm());
    }
    if (env[1] < 0.95 * env[0] && env[2] < 0.95 * env[1] && env[3] < 0.95 * env[2]) {
      out.kind = OutcomeKind::FixedPoint;
      out.end = xs_limit;
      out.settle_time = t;
      out.tail = {xs_limit};
      return out;
    }
  }
  const std::size_t half = xs.size() / 2;
  std::vector<double> tt(ts.begin() + static_cast<long>(half), ts.end());
  out.tail.assign(xs.begin() + static_cast<long>(half), xs.end());
  out.kind = recurrent(tt, out.tail, speed, opt.dt) ? OutcomeKind::Periodic : OutcomeKind::AperiodicBounded;
  out.end = x;
  out.settle_time = t;
  return out;
}

int identify_attractor(const std::vector<RestAttractor>& attractors, const RunOutcome& run) {
  for (std::size_t a = 0; a < attractors.size(); ++a) {
    const auto& att = attractors[a];
    if (att.kind != run.kind) continue;
    if (att.kind == OutcomeKind::FixedPoint) {
      if ((att.point - run.end).norm() < 1e-4 * std::max(1.0, att.point.norm())) return static_cast<int>(a);
      continue;
    }
    // Non-fixed: the run's tail must stay near the recorded cloud.
    std::size_t near = 0;
    for (const auto& p : run.tail) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : att.cloud) best = std::min(best, (p - c).norm());
      near += best < att.match_radius;
    }
    if (!run.tail.empty() && near * 5 >= run.tail.size() * 4) return static_cast<int>(a);
  }
  return -1;
}

AttractorProbe probe_attractors(const PolySystem& sys, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                const ProbeOptions& opt) {
  if (sys.dim() != 3) throw InvalidArgument("attractor probing needs a three-dimensional system");
  if (lower.size() != 3 || upper.size() != 3) throw InvalidArgument("probe control box must be three-dimensional");
  if (opt.per_axis < 1) throw InvalidArgument("probe.per_axis must be positive");
  if (opt.box_lower.size() != 3 || opt.box_upper.size() != 3) throw InvalidArgument("probe state box must be three-dimensional");
  AttractorProbe probe;
  probe.lower = lower;
  probe.upper = upper;
  probe.per_axis = opt.per_axis;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const StateBox box{opt.box_lower, opt.box_upper};

  probe.rest_fixed_points = find_fixed_points(sys, zero, box);
  for (const auto& fp : probe.rest_fixed_points)
    if (fp.region == Region::A) probe.attractors.push_back({OutcomeKind::FixedPoint, fp.location, {}, 0.0});

  // Non-fixed attractors at rest, from a grid of starts.
  const int g = std::max(opt.discovery_grid, 0);
  std::vector<RunOutcome> found(static_cast<std::size_t>(g * g * g));
  parallel_for(found.size(), opt.workers, [&](std::size_t s) {
    Eigen::VectorXd x0(3);
    std::size_t rem = s;
    for (int d = 0; d < 3; ++d) {
      // Cell-centred with a per-axis shift, so no start sits on a symmetry plane of the model.
      const double a = (static_cast<double>(rem % static_cast<std::size_t>(g)) + 0.5 + 0.17 * (d + 1) - 0.34) / g;
      x0[d] = opt.box_lower[d] + a * (opt.box_upper[d] - opt.box_lower[d]);
      rem /= static_cast<std::size_t>(g);
    }
    found[s] = classify_run(sys, zero, x0, opt.horizon + opt.release_horizon, opt);
  });
  for (const auto& run : found) {
    if (run.kind == OutcomeKind::Diverged || identify_attractor(probe.attractors, run) >= 0) continue;
    if (run.kind == OutcomeKind::FixedPoint) continue;
    RestAttractor att;
    att.kind = run.kind;
    att.point = run.tail.back();
    const std::size_t step = std::max<std::size_t>(1, run.tail.size() / 400);
    for (std::size_t i = 0; i < run.tail.size(); i += step) att.cloud.push_back(run.tail[i]);
    att.match_radius = std::max(1e-3, 0.1 * extent(att.cloud));
    probe.attractors.push_back(std::move(att));
  }

  auto starts = [&](const RestAttractor& a) {
    if (a.kind == OutcomeKind::FixedPoint) return std::vector<Eigen::VectorXd>{a.point};
    std::vector<Eigen::VectorXd> s;
    const int m = std::max(opt.cloud_seeds, 1);
    for (int k = 0; k < m; ++k) s.push_back(a.cloud[a.cloud.size() * static_cast<std::size_t>(k) / static_cast<std::size_t>(m)]);
    return s;
  };

  const int n = opt.per_axis;
  probe.nodes.resize(static_cast<std::size_t>(n * n * n));
  parallel_for(probe.nodes.size(), opt.workers, [&](std::size_t idx) {
    auto& node = probe.nodes[idx];
    const int i = static_cast<int>(idx % static_cast<std::size_t>(n));
    const int j = static_cast<int>(idx / static_cast<std::size_t>(n) % static_cast<std::size_t>(n));
    const int k = static_cast<int>(idx / static_cast<std::size_t>(n * n));
    node.u = probe.control(i, j, k);
    if (opt.fixed_point_grid > 0) {
      FixedPointOptions fo;
      fo.grid = opt.fixed_point_grid;
      node.fixed_points = find_fixed_points(sys, node.u, box, fo);
    }
    for (const auto& att : probe.attractors) {
      OutcomeKind kind = OutcomeKind::FixedPoint;
      double settle = 0.0, rel_time = 0.0;
      int target = -2;
      bool first = true;
      for (const auto& x0 : starts(att)) {
        const auto run = classify_run(sys, node.u, x0, opt.horizon, opt);
        if (first) kind = run.kind;
        settle = std::max(settle, run.settle_time);
        int id = -1;
        if (run.kind != OutcomeKind::Diverged) {
          const auto rel = classify_run(sys, zero, run.end, opt.release_horizon, opt);
          id = identify_attractor(probe.attractors, rel);
          rel_time = std::max(rel_time, rel.settle_time);
        }
        target = first ? id : (target == id ? id : -1);
        first = false;
      }
      node.under.push_back(kind);
      node.settle_time.push_back(settle);
      node.release.push_back(target);
      node.release_time.push_back(rel_time);
    }
  });
  return probe;
}

}  // namespace ffc
