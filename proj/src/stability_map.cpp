#include "ffc/stability_map.hpp"

#include "ffc/errors.hpp"
#include "ffc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

namespace ffc {

Eigen::Vector2d StabilityMap::control(int i, int j) const {
  const double a = nx > 1 ? static_cast<double>(i) / (nx - 1) : 0.0;
  const double b = ny > 1 ? static_cast<double>(j) / (ny - 1) : 0.0;
  return {lower.x() + a * (upper.x() - lower.x()), lower.y() + b * (upper.y() - lower.y())};
}

double StabilityMap::cell_diagonal() const {
  const double hx = (upper.x() - lower.x()) / std::max(nx - 1, 1), hy = (upper.y() - lower.y()) / std::max(ny - 1, 1);
  return std::hypot(hx, hy);
}

const MapRoot* StabilityMap::root(std::size_t cell, int branch) const {
  for (const auto& r : cells[cell].roots)
    if (r.branch == branch) return &r;
  return nullptr;
}

char StabilityMap::cls(std::size_t cell, int branch) const {
  if (cells[cell].ambiguous) return '?';
  const MapRoot* r = root(cell, branch);
  return r ? to_char(r->region) : '-';
}

std::vector<std::size_t> StabilityMap::region_set(int branch, char c) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < cells.size(); ++k)
    if (cls(k, branch) == c) out.push_back(k);
  return out;
}

std::size_t StabilityMap::nearest(const Eigen::Vector2d& u) const {
  auto idx = [](double v, double lo, double hi, int n) {
    if (n <= 1 || hi <= lo) return 0;
    return std::clamp(static_cast<int>(std::lround((v - lo) / (hi - lo) * (n - 1))), 0, n - 1);
  };
  return index(idx(u.x(), lower.x(), upper.x(), nx), idx(u.y(), lower.y(), upper.y(), ny));
}

namespace {

std::vector<MapRoot> solve_cell(const PolySystem& sys, const PlanarSolver& solver, const Eigen::Vector2d& u,
                                const StateBox& fallback, bool& used_fallback) {
  std::vector<Eigen::Vector2d> pts;
  used_fallback = false;
  if (auto roots = solver.solve(u)) {
    pts = *roots;
  } else {
    used_fallback = true;
    FixedPointOptions fo;
    fo.elimination = false;
    for (const auto& r : find_fixed_points(sys, u, fallback, fo)) pts.emplace_back(r.location);
  }
  std::vector<MapRoot> out;
  for (const auto& p : pts) {
    const auto jac = sys.jacobian_at(p);
    const auto c = classify(jac);
    out.push_back({p, c.region, jac.trace, jac.det, c.borderline, -1});
  }
  return out;
}

// Minimum total distance assignment of cur roots to ref roots (one-to-one, min(n, m) pairs);
// result[i] = index in ref or -1. Root counts are small, so permutations are enumerated.
std::vector<int> match(const std::vector<MapRoot>& cur, const std::vector<MapRoot>& ref) {
  std::vector<int> out(cur.size(), -1);
  if (cur.empty() || ref.empty()) return out;
  const bool flip = cur.size() > ref.size();
  const auto& small = flip ? ref : cur;
  const auto& big = flip ? cur : ref;
  std::vector<int> perm(big.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_perm;
  do {
    double sum = 0;
    for (std::size_t i = 0; i < small.size(); ++i)
      sum += (small[i].location - big[static_cast<std::size_t>(perm[i])].location).norm();
    if (sum < best) {
      best = sum;
      best_perm.assign(perm.begin(), perm.begin() + static_cast<long>(small.size()));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (flip) out[static_cast<std::size_t>(best_perm[i])] = static_cast<int>(i);
    else out[i] = best_perm[i];
  }
  return out;
}

}  // namespace

StabilityMap stability_map(const PolySystem& sys, const Eigen::Vector2d& lower, const Eigen::Vector2d& upper,
                           const MapOptions& opt) {
  if (sys.dim() != 2) throw InvalidArgument("stability maps need a planar system");
  if (opt.resolution < 16) throw InvalidArgument("analysis.resolution must be at least 16");
  if (!(upper.x() > lower.x() && upper.y() > lower.y())) throw InvalidArgument("analysis.box must be non-degenerate");
  StabilityMap map;
  map.lower = lower;
  map.upper = upper;
  map.nx = map.ny = opt.resolution;
  map.cells.resize(static_cast<std::size_t>(map.nx) * static_cast<std::size_t>(map.ny));
  const PlanarSolver solver(sys);

  parallel_for(map.cells.size(), opt.workers, [&](std::size_t k) {
    auto& c = map.cells[k];
    c.u = map.control(static_cast<int>(k % static_cast<std::size_t>(map.nx)), static_cast<int>(k / static_cast<std::size_t>(map.nx)));
    c.roots = solve_cell(sys, solver, c.u, opt.fallback_box, c.newton_fallback);
  });

  // Branch ids from the fixed points at u = 0.
  bool rest_fallback = false;
  const auto rest = solve_cell(sys, solver, Eigen::Vector2d::Zero(), opt.fallback_box, rest_fallback);
  for (std::size_t b = 0; b < rest.size(); ++b) {
    map.rest_points.push_back(rest[b].location);
    if (rest[b].region == Region::A) map.attractors.push_back(static_cast<int>(b));
  }
  // Anchor: the node closest to u = 0 that the rest roots reach along a straight path without
  // a root count change. Labels are carried along that path; when no such node exists the
  // nearest node is used and lost labels stay unassigned.
  auto carry = [&](std::size_t k, bool strict) -> std::optional<std::vector<MapRoot>> {
    std::vector<MapRoot> prev = rest;
    for (std::size_t b = 0; b < prev.size(); ++b) prev[b].branch = static_cast<int>(b);
    const int steps = 200;
    for (int s = 1; s <= steps; ++s) {
      bool fb = false;
      auto cur = s == steps ? map.cells[k].roots
                            : solve_cell(sys, solver, map.cells[k].u * (static_cast<double>(s) / steps), opt.fallback_box, fb);
      if (strict && cur.size() != prev.size()) return std::nullopt;
      const auto m = match(cur, prev);
      for (std::size_t i = 0; i < cur.size(); ++i)
        cur[i].branch = m[i] >= 0 ? prev[static_cast<std::size_t>(m[i])].branch : static_cast<int>(rest.size());
      prev = std::move(cur);
    }
    return prev;
  };
  std::vector<std::size_t> order(map.cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return map.cells[x].u.norm() < map.cells[y].u.norm(); });
  map.anchor = order.front();
  std::optional<std::vector<MapRoot>> labelled;
  int tried = 0;
  for (std::size_t k : order) {
    if (map.cells[k].roots.size() != rest.size()) continue;
    if ((labelled = carry(k, true))) {
      map.anchor = k;
      break;
    }
    if (++tried == 64) break;
  }
  if (!labelled) labelled = carry(map.anchor, false);
  map.cells[map.anchor].roots = std::move(*labelled);

  // Continuation: union roots matched across grid edges, edges taken in order of distance from
  // the anchor. A union that would put two roots of one node on the same branch is refused and
  // both nodes of that edge become ambiguous; around a cusp this leaves a seam where the fronts meet.
  std::vector<std::size_t> first(map.cells.size() + 1, 0);
  for (std::size_t k = 0; k < map.cells.size(); ++k) first[k + 1] = first[k] + map.cells[k].roots.size();
  const std::size_t total = first.back();
  std::vector<std::size_t> parent(total), owner(total);
  std::vector<std::vector<std::size_t>> members(total);  // cells per set root
  for (std::size_t k = 0; k < map.cells.size(); ++k)
    for (std::size_t r = first[k]; r < first[k + 1]; ++r) {
      parent[r] = r;
      owner[r] = k;
      members[r] = {k};
    }
  auto find = [&](std::size_t r) {
    while (parent[r] != r) r = parent[r] = parent[parent[r]];
    return r;
  };
  struct Edge {
    double d;
    std::size_t a, b;
  };
  std::vector<Edge> edges;
  const int ai = static_cast<int>(map.anchor % static_cast<std::size_t>(map.nx));
  const int aj = static_cast<int>(map.anchor / static_cast<std::size_t>(map.nx));
  for (int j = 0; j < map.ny; ++j)
    for (int i = 0; i < map.nx; ++i) {
      if (i + 1 < map.nx) edges.push_back({std::hypot(i + 0.5 - ai, j - aj), map.index(i, j), map.index(i + 1, j)});
      if (j + 1 < map.ny) edges.push_back({std::hypot(i - ai, j + 0.5 - aj), map.index(i, j), map.index(i, j + 1)});
    }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.d < y.d; });
  for (const auto& e : edges) {
    const auto m = match(map.cells[e.a].roots, map.cells[e.b].roots);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (m[r] < 0) continue;
      std::size_t x = find(first[e.a] + r), y = find(first[e.b] + static_cast<std::size_t>(m[r]));
      if (x == y) continue;
      if (members[x].size() < members[y].size()) std::swap(x, y);
      bool clash = false;
      for (std::size_t k : members[y]) {
        for (std::size_t q = first[k]; q < first[k + 1] && !clash; ++q) clash = find(q) == x;
        if (clash) break;
      }
      if (clash) {
        map.cells[e.a].ambiguous = map.cells[e.b].ambiguous = true;
        continue;
      }
      parent[y] = x;
      members[x].insert(members[x].end(), members[y].begin(), members[y].end());
      members[y].clear();
      members[y].shrink_to_fit();
    }
  }
  // Sets holding the anchor's labelled roots keep those ids; the rest are numbered by first node.
  std::vector<int> id(total, -1);
  for (std::size_t r = 0; r < map.cells[map.anchor].roots.size(); ++r) {
    const int b = map.cells[map.anchor].roots[r].branch;
    if (b < static_cast<int>(rest.size())) id[find(first[map.anchor] + r)] = b;
  }
  int next_id = static_cast<int>(rest.size());
  for (std::size_t r = 0; r < total; ++r) {
    const std::size_t x = find(r);
    if (id[x] < 0) id[x] = next_id++;
    map.cells[owner[r]].roots[r - first[owner[r]]].branch = id[x];
  }
  map.branch_count = next_id;

  // Cycle flags on the coarse sub-grid, only where a source exists.
  if (opt.cycle_grid > 0) {
    // Where a source coexists with a sink the sink-plus-cycle regions are narrow, so those
    // nodes are probed four times as densely.
    const int stride = std::max(1, map.nx / opt.cycle_grid), fine = std::max(1, stride / 4);
    std::vector<std::size_t> probe;
    for (int j = (stride / 2) % fine; j < map.ny; j += fine)
      for (int i = (stride / 2) % fine; i < map.nx; i += fine) {
        const std::size_t k = map.index(i, j);
        auto& c = map.cells[k];
        const bool coarse = (i - stride / 2) % stride == 0 && (j - stride / 2) % stride == 0;
        bool source = false, sink = false;
        for (const auto& r : c.roots) {
          source = source || r.region == Region::B;
          sink = sink || r.region == Region::A;
        }
        if (!coarse && !(source && sink)) continue;
        c.cycles = 0;
        if (source) probe.push_back(k);
      }
    parallel_for(probe.size(), opt.workers, [&](std::size_t p) {
      auto& c = map.cells[probe[p]];
      std::vector<Eigen::Vector2d> pts;
      Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
      for (const auto& r : c.roots) {
        pts.push_back(r.location);
        lo = lo.cwiseMin(r.location);
        hi = hi.cwiseMax(r.location);
      }
      const Eigen::Vector2d pad = (0.5 * (hi - lo)).cwiseMax(Eigen::Vector2d::Ones());
      const StateBox box{lo - pad, hi + pad};
      const auto rep = detect_limit_cycles(sys, c.u, box, pts, opt.cycle);
      c.cycles = static_cast<int>(rep.cycles.size());
      c.cycle_undetermined = rep.undetermined;
    });
  }
  return map;
}

void write_regions_csv(std::ostream& os, const StabilityMap& map) {
  os << "u1,u2,branch_id,class\n";
  char buf[128];
  for (std::size_t k = 0; k < map.cells.size(); ++k)
    for (int b = 0; b < map.branch_count; ++b) {
      const char c = map.cls(k, b);
      const char* name = c == '-' ? "absent" : (c == '?' ? "ambiguous" : nullptr);
      if (name)
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%s\n", map.cells[k].u.x(), map.cells[k].u.y(), b, name);
      else
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%c\n", map.cells[k].u.x(), map.cells[k].u.y(), b, c);
      os << buf;
    }
}

void write_cycles_csv(std::ostream& os, const StabilityMap& map) {
  os << "u1,u2,sinks,sources,cycles,undetermined\n";
  char buf[160];
  for (const auto& c : map.cells) {
    if (c.cycles < 0) continue;
    int sinks = 0, sources = 0;
    for (const auto& r : c.roots) {
      sinks += r.region == Region::A;
      sources += r.region == Region::B;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%d,%d,%d\n", c.u.x(), c.u.y(), sinks, sources, c.cycles,
                  c.cycle_undetermined ? 1 : 0);
    os << buf;
  }
}

RegionCensus region_census(const StabilityMap& map) {
  RegionCensus rc;
  for (const auto& c : map.cells) {
    int sinks = 0;
    bool source = false;
    for (const auto& r : c.roots) {
      sinks += r.region == Region::A;
      source = source || r.region == Region::B;
    }
    const bool known = c.cycles >= 0 ? !c.cycle_undetermined : !source;
    const int cycles = std::max(c.cycles, 0);
    if (c.ambiguous || !known) ++rc.other;
    else if (sinks >= 2 && cycles == 0) ++rc.two_sinks;
    else if (sinks == 1 && cycles == 0) ++rc.one_sink;
    else if (sinks == 1) ++rc.sink_and_cycle;
    else if (sinks == 0 && cycles > 0) ++rc.cycle_only;
    else ++rc.other;
  }
  return rc;
}

const PairEntry* ControllabilityReport::find(int from, int to) const {
  for (const auto& p : pairs)
    if (p.from == from && p.to == to) return &p;
  return nullptr;
}

ControllabilityReport controllability_report(const StabilityMap& map) {
  ControllabilityReport rep;
  rep.attractor_branches = map.attractors;
  const int n = static_cast<int>(map.attractors.size());
  std::vector<std::vector<bool>> edge(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      PairEntry e;
      e.from = a;
      e.to = b;
      const int bf = map.attractors[static_cast<std::size_t>(a)], bt = map.attractors[static_cast<std::size_t>(b)];
      for (std::size_t k = 0; k < map.cells.size(); ++k) {
        if (map.cells[k].ambiguous || map.cls(k, bt) != 'A' || map.cls(k, bf) == 'A') continue;
        ++e.necessary_count;
        if (e.necessary_witness.size() < 16) e.necessary_witness.push_back(k);
        bool others = true;
        for (int c = 0; c < n && others; ++c)
          if (c != b && map.cls(k, map.attractors[static_cast<std::size_t>(c)]) == 'A') others = false;
        if (others) {
          ++e.sufficient_count;
          if (e.sufficient_witness.size() < 16) e.sufficient_witness.push_back(k);
        }
      }
      e.necessary = e.necessary_count > 0;
      e.sufficient = e.sufficient_count > 0;
      edge[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = e.necessary;
      rep.all_necessary = rep.all_necessary && e.necessary;
      rep.all_sufficient = rep.all_sufficient && e.sufficient;
      rep.pairs.push_back(std::move(e));
    }
  for (int a = 0; a < n; ++a) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::deque<int> q{a};
    seen[static_cast<std::size_t>(a)] = true;
    while (!q.empty()) {
      const int x = q.front();
      q.pop_front();
      for (int y = 0; y < n; ++y)
        if (!seen[static_cast<std::size_t>(y)] && edge[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]) {
          seen[static_cast<std::size_t>(y)] = true;
          q.push_back(y);
        }
    }
    std::vector<int> r;
    for (int y = 0; y < n; ++y)
      if (y != a && seen[static_cast<std::size_t>(y)]) r.push_back(y);
    if (static_cast<int>(r.size()) != n - 1) rep.reach_any = false;
    rep.reachable.push_back(std::move(r));
  }
  return rep;
}

AgreementResult curve_agreement(const StabilityMap& map, const std::vector<BifurcationCurve>& curves) {
  AgreementResult res;
  const double diag = map.cell_diagonal();
  auto near = [&](const Eigen::Vector2d& u) {
    for (const auto& c : curves)
      if (distance_to_curve(c, u, 10 * diag) <= diag) return true;
    return false;
  };
  for (int j = 0; j < map.ny; ++j)
    for (int i = 0; i < map.nx; ++i)
      for (int d = 0; d < 2; ++d) {
        const int ni = i + (d == 0), nj = j + (d == 1);
        if (ni >= map.nx || nj >= map.ny) continue;
        const std::size_t a = map.index(i, j), b = map.index(ni, nj);
        if (map.cells[a].ambiguous || map.cells[b].ambiguous) continue;
        bool change = false;
        for (int k = 0; k < map.branch_count && !change; ++k) change = map.cls(a, k) != map.cls(b, k);
        if (!change) continue;
        ++res.edges;
        const long da = static_cast<long>(map.cells[a].roots.size()) - static_cast<long>(map.cells[b].roots.size());
        if (std::abs(da) == 2) {
          ++res.folds;
        } else if (near(map.cells[a].u) || near(map.cells[b].u)) {
          ++res.near_curve;
        } else {
          res.unexplained.emplace_back(a, b);
        }
      }
  return res;
}

}  // namespace ffc
