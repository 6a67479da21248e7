#include "ffc/limit_cycles.hpp"

#include "ffc/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ffc {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

struct Rhs {
  const Polynomial* f;
  const Polynomial* g;
  double u1, u2;
  void operator()(const State& x, State& dx, double) const {
    dx[0] = f->evaluate(x) + u1;
    dx[1] = g->evaluate(x) + u2;
  }
};

using Dense = odeint::dense_output_runge_kutta<odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<State>>>;

Eigen::Vector2d vec(const State& s) { return {s[0], s[1]}; }

class Orbit {
 public:
  Orbit(const Rhs& rhs, const State& x0, double rtol, double atol) : rhs_(rhs) {
    stepper_ = odeint::make_dense_output(atol, rtol, odeint::runge_kutta_dopri5<State>());
    stepper_.initialize(x0, 0.0, 1e-3);
  }
  void step() { stepper_.do_step(rhs_); }
  double t0() const { return stepper_.previous_time(); }
  double t1() const { return stepper_.current_time(); }
  const State& x0() const { return stepper_.previous_state(); }
  const State& x1() const { return stepper_.current_state(); }
  State at(double t) {
    State s;
    stepper_.calc_state(t, s);
    return s;
  }

 private:
  Rhs rhs_;
  Dense stepper_;
};

struct Crossing {
  double x, t;
  int dir;
};

// Crossing of the ray {y = c.y, x > c.x} during the last step, if any.
std::optional<Crossing> ray_crossing(Orbit& o, const Eigen::Vector2d& c) {
  const double sa = o.x0()[1] - c.y(), sb = o.x1()[1] - c.y();
  if (sa == 0.0 || (sa > 0) == (sb > 0) || sb == 0.0) return std::nullopt;
  double lo = o.t0(), hi = o.t1();
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double sm = o.at(mid)[1] - c.y();
    if ((sm > 0) == (sa > 0)) lo = mid;
    else hi = mid;
  }
  const double tc = 0.5 * (lo + hi);
  const State s = o.at(tc);
  if (s[0] <= c.x()) return std::nullopt;
  return Crossing{s[0], tc, sb > sa ? 1 : -1};
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = b - a;
  const double l2 = d.squaredNorm();
  const double t = l2 > 0 ? std::clamp((p - a).dot(d) / l2, 0.0, 1.0) : 0.0;
  return (a + t * d - p).norm();
}

// Membership test for a sampled cycle. Chords cut corners on fast stretches, so the
// tolerance grows with the length of the nearest chord.
bool on_cycle(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p, double tol) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto &a = poly[i], &b = poly[(i + 1) % poly.size()];
    if (segment_distance(p, a, b) < std::max(tol, 0.25 * (b - a).norm())) return true;
  }
  return false;
}

std::vector<Eigen::Vector2d> trace_period(const Rhs& rhs, const State& start, double period, int n, double rtol,
                                          double atol) {
  Orbit o(rhs, start, rtol, atol);
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double t = period * k / n;
    while (o.t1() < t) o.step();
    out.push_back(k == 0 ? vec(start) : vec(o.at(t)));
  }
  return out;
}

struct Return {
  double x = 0.0;
  std::vector<Eigen::Vector2d> path;
};

// Next crossing of the section ray in direction `dir`, starting on the ray at x = x_start.
std::optional<Return> first_return(const Rhs& rhs, const Eigen::Vector2d& center, double x_start, int dir,
                                   double max_time, double rtol, double atol) {
  Orbit o(rhs, State{x_start, center.y()}, rtol, atol);
  Return r;
  r.path.emplace_back(x_start, center.y());
  while (o.t1() < max_time) {
    o.step();
    for (int k = 1; k <= 4; ++k) r.path.push_back(vec(o.at(o.t0() + (o.t1() - o.t0()) * k / 4)));
    if (!std::isfinite(o.x1()[0]) || !std::isfinite(o.x1()[1])) return std::nullopt;
    if (o.t0() == 0.0) continue;
    if (auto c = ray_crossing(o, center); c && c->dir == dir) {
      r.x = c->x;
      r.path.back() = Eigen::Vector2d(c->x, center.y());
      return r;
    }
  }
  return std::nullopt;
}

std::optional<TrappingCertificate> certify(const Rhs& rhs, const LimitCycle& cyc,
                                           const std::vector<FixedPointRecord>& fps, double rtol, double atol) {
  // Center: an enclosed source if there is one.
  std::optional<Eigen::Vector2d> center;
  for (const auto& fp : fps)
    if (winding_number(cyc.samples, fp.location) != 0 && (!center || fp.region == Region::B)) center = Eigen::Vector2d(fp.location);
  if (!center) return std::nullopt;
  const Eigen::Vector2d c = *center;
  std::vector<std::pair<double, int>> hits;
  const auto& S = cyc.samples;
  for (std::size_t i = 0; i < S.size(); ++i) {
    const auto &a = S[i], &b = S[(i + 1) % S.size()];
    const double sa = a.y() - c.y(), sb = b.y() - c.y();
    if ((sa > 0) == (sb > 0)) continue;
    const double x = a.x() + (b.x() - a.x()) * sa / (sa - sb);
    if (x > c.x()) hits.emplace_back(x, sb > sa ? 1 : -1);
  }
  if (hits.size() != 1) return std::nullopt;
  const double xc = hits[0].first;
  const int dir = hits[0].second;
  double delta = 0.2 * (xc - c.x());
  for (int attempt = 0; attempt < 5; ++attempt, delta /= 4) {
    const double max_time = 4.0 * cyc.period;
    const auto out = first_return(rhs, c, xc + delta, dir, max_time, rtol, atol);
    const auto in = first_return(rhs, c, xc - delta, dir, max_time, rtol, atol);
    if (!out || !in) continue;
    if (!(out->x > xc && out->x < xc + delta && in->x < xc && in->x > xc - delta)) continue;
    bool free = true;
    for (const auto& fp : fps)
      if (winding_number(out->path, fp.location) != winding_number(in->path, fp.location)) free = false;
    if (!free) continue;
    // Flow across both section segments must have the crossing direction everywhere.
    double min_flux = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (const auto& [a, b] : {std::pair{out->x, xc + delta}, std::pair{xc - delta, in->x}})
      for (int k = 0; k <= 20; ++k) {
        State p{a + (b - a) * k / 20.0, c.y()}, d;
        rhs(p, d, 0.0);
        if (d[1] * dir <= 0) ok = false;
        min_flux = std::min(min_flux, std::abs(d[1]));
      }
    if (!ok) continue;
    TrappingCertificate cert;
    cert.center = c;
    cert.outer_start = xc + delta;
    cert.outer_return = out->x;
    cert.inner_start = xc - delta;
    cert.inner_return = in->x;
    cert.min_section_flux = min_flux;
    cert.outer = out->path;
    cert.inner = in->path;
    return cert;
  }
  return std::nullopt;
}

enum class SeedOutcome { Settled, Escaped, Cycle, Undetermined };

struct SeedResult {
  SeedOutcome outcome = SeedOutcome::Undetermined;
  State crossing{};
  double period = 0.0;
};

SeedResult run_seed(const Rhs& rhs, const State& x0, const std::vector<Eigen::Vector2d>& sinks,
                    const std::vector<Eigen::Vector2d>& all_fps, double scale, double escape, const CycleOptions& opt,
                    double atol) {
  Orbit o(rhs, x0, opt.rtol, atol);
  const double tol = opt.recurrence_tol * scale;
  std::vector<std::pair<double, Eigen::Vector2d>> rec;
  std::vector<Crossing> cross;
  std::optional<Eigen::Vector2d> centroid;
  double chunk = opt.chunk;
  double next_check = chunk;
  while (o.t1() < opt.horizon) {
    o.step();
    const Eigen::Vector2d x = vec(o.x1());
    if (!x.allFinite() || x.norm() > escape) return {SeedOutcome::Escaped};
    for (const auto& s : sinks)
      if ((x - s).norm() < 1e-6 * std::max(1.0, s.norm())) return {SeedOutcome::Settled};
    State d;
    rhs(o.x1(), d, 0.0);
    if (std::hypot(d[0], d[1]) < 1e-10 * std::max(1.0, x.norm())) return {SeedOutcome::Settled};
    rec.emplace_back(o.t1(), x);
    if (centroid) {
      if (auto c = ray_crossing(o, *centroid)) {
        if (cross.empty() || c->dir == cross.front().dir) cross.push_back(*c);
        const std::size_t k = cross.size();
        if (k >= 3) {
          const double dk = cross[k - 1].x - cross[k - 2].x, dk1 = cross[k - 2].x - cross[k - 3].x;
          const double denom = dk - dk1;
          const double lim = denom != 0.0 ? cross[k - 1].x - dk * dk / denom : cross[k - 1].x;
          const bool converged = std::abs(dk) < tol && std::abs(lim - cross[k - 1].x) < tol;
          // Spiralling into a fixed point also gives converging crossings; require the limit
          // to sit away from every fixed point.
          bool at_fp = false;
          for (const auto& fp : all_fps)
            if ((Eigen::Vector2d(lim, centroid->y()) - fp).norm() < 100 * tol) at_fp = true;
          if (converged && !at_fp) {
            SeedResult r;
            r.outcome = SeedOutcome::Cycle;
            r.crossing = State{cross[k - 1].x, centroid->y()};
            r.period = cross[k - 1].t - cross[k - 2].t;
            return r;
          }
        }
      }
    }
    if (o.t1() >= next_check) {
      // Section through the centroid of the second half of what was seen since the last reset.
      Eigen::Vector2d sum = Eigen::Vector2d::Zero();
      std::size_t n = 0;
      const double t_half = o.t1() - 0.5 * chunk;
      for (const auto& [t, p] : rec)
        if (t >= t_half) {
          sum += p;
          ++n;
        }
      if (cross.size() < 3 && n > 0) {
        // Too few crossings: the window may be shorter than one period, so widen it.
        if (centroid && cross.size() < 2) chunk *= 2;
        centroid = sum / static_cast<double>(n);
        cross.clear();
      }
      rec.clear();
      next_check += chunk;
    }
  }
  return {SeedOutcome::Undetermined};
}

}  // namespace

int winding_number(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p) {
  int w = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto &a = poly[i], &b = poly[(i + 1) % poly.size()];
    const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y());
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && cross > 0) ++w;
    } else if (b.y() <= p.y() && cross < 0) {
      --w;
    }
  }
  return w;
}

CycleReport detect_limit_cycles(const PolySystem& sys, const Eigen::Vector2d& u, const StateBox& box,
                                const CycleOptions& opt) {
  if (sys.dim() != 2) throw InvalidArgument("limit cycle detection needs a planar system");
  FixedPointOptions fo;
  const auto fps = find_fixed_points(sys, u, box, fo);
  std::vector<Eigen::Vector2d> pts;
  for (const auto& f : fps) pts.push_back(f.location);
  return detect_limit_cycles(sys, u, box, pts, opt);
}

CycleReport detect_limit_cycles(const PolySystem& sys, const Eigen::Vector2d& u, const StateBox& box,
                                const std::vector<Eigen::Vector2d>& fixed_points, const CycleOptions& opt) {
  if (sys.dim() != 2) throw InvalidArgument("limit cycle detection needs a planar system");
  if (box.lower.size() != 2 || box.upper.size() != 2) throw InvalidArgument("cycle search box must be planar");
  CycleReport rep;
  const Eigen::VectorXd uu = u;
  for (const auto& p : fixed_points) rep.fixed_points.push_back(make_record(sys, p, uu));
  const Rhs rhs{&sys.component(0), &sys.component(1), u.x(), u.y()};
  double scale = std::max({1.0, box.lower.cwiseAbs().maxCoeff(), box.upper.cwiseAbs().maxCoeff()});
  for (const auto& p : fixed_points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double escape = 1e3 * scale;
  const double atol = 1e-10 * scale;

  std::vector<Eigen::Vector2d> sinks;
  std::vector<State> seeds;
  for (const auto& fp : rep.fixed_points) {
    if (fp.region == Region::A) sinks.push_back(fp.location);
    if (fp.region != Region::B || !box.contains(fp.location)) continue;
    const double r = opt.ring_radius * std::max(1.0, fp.location.norm());
    for (int k = 0; k < opt.ring; ++k) {
      const double a = 2 * M_PI * (k + 0.25) / opt.ring;
      seeds.push_back(State{fp.location.x() + r * std::cos(a), fp.location.y() + r * std::sin(a)});
    }
  }
  if (opt.corners)
    for (int k = 0; k < 4; ++k)
      seeds.push_back(State{(k & 1) ? box.upper.x() : box.lower.x(), (k & 2) ? box.upper.y() : box.lower.y()});
  rep.seeds = static_cast<int>(seeds.size());

  for (const auto& s : seeds) {
    // A seed already sitting on a known cycle adds nothing.
    bool known = false;
    for (const auto& c : rep.cycles)
      if (on_cycle(c.samples, vec(s), 1e-3 * scale)) known = true;
    if (known) continue;
    const auto r = run_seed(rhs, s, sinks, fixed_points, scale, escape, opt, atol);
    if (r.outcome == SeedOutcome::Undetermined) rep.undetermined = true;
    if (r.outcome != SeedOutcome::Cycle) continue;
    bool dup = false;
    for (const auto& c : rep.cycles)
      if (on_cycle(c.samples, vec(r.crossing), 1e-3 * scale)) dup = true;
    if (dup) continue;
    LimitCycle cyc;
    cyc.period = r.period;
    cyc.samples = trace_period(rhs, r.crossing, r.period, opt.period_samples, opt.rtol, atol);
    for (const auto& p : fixed_points)
      if (winding_number(cyc.samples, p) != 0) cyc.enclosed.push_back(p);
    if (cyc.enclosed.empty()) continue;  // index theory: a cycle must surround a fixed point
    cyc.certificate = certify(rhs, cyc, rep.fixed_points, opt.rtol, atol);
    rep.cycles.push_back(std::move(cyc));
  }
  return rep;
}

std::string to_string(InfinityBehaviour b) {
  switch (b) {
    case InfinityBehaviour::Inward: return "inward";
    case InfinityBehaviour::Outward: return "outward";
    case InfinityBehaviour::Mixed: return "mixed";
  }
  return "?";
}

InfinityBehaviour global_stability(const PolySystem& sys, const Eigen::Vector2d& u, const GlobalStabilityOptions& opt) {
  if (sys.dim() != 2) throw InvalidArgument("global stability needs a planar system");
  const auto inf = sys.infinity_transform(u);
  auto dir = [&](const Eigen::Vector2d& h) -> Eigen::Vector2d {
    const Eigen::Vector2d v = inf.cleared(h);
    const double n = v.norm();
    return n > 0 && std::isfinite(n) ? Eigen::Vector2d(v / n) : Eigen::Vector2d::Zero();
  };
  const double r = opt.radius, step = r / 20;
  int away = 0, toward = 0, zero = 0;
  for (int k = 0; k < opt.samples; ++k) {
    const double a = 2 * M_PI * (k + 0.5) / opt.samples;
    Eigen::Vector2d h(r * std::cos(a), r * std::sin(a));
    if (dir(h).isZero()) {
      ++zero;
      continue;
    }
    for (int s = 0; s < opt.max_steps; ++s) {
      const Eigen::Vector2d k1 = dir(h), k2 = dir(h + 0.5 * step * k1), k3 = dir(h + 0.5 * step * k2),
                            k4 = dir(h + step * k3);
      const Eigen::Vector2d d = (k1 + 2 * k2 + 2 * k3 + k4) / 6;
      if (d.isZero()) break;
      const Eigen::Vector2d prev = h;
      h += step * d;
      // Reaching a hatted axis means the original coordinate reached infinity.
      if (prev.x() * h.x() <= 0 || prev.y() * h.y() <= 0) {
        ++toward;
        break;
      }
      if (h.norm() > 10 * r) {
        ++away;
        break;
      }
      if (h.norm() < 1e-2 * r) {
        ++toward;
        break;
      }
    }
  }
  if (zero == opt.samples) throw NumericError("hatted field vanishes on the whole sample circle");
  if (away == opt.samples) return InfinityBehaviour::Inward;
  if (toward == opt.samples) return InfinityBehaviour::Outward;
  return InfinityBehaviour::Mixed;
}

std::optional<DulacCertificate> dulac_no_cycle_region(const PolySystem& sys, const Eigen::Vector2d& u,
                                                      const Rect& R, const std::vector<std::string>& family, int grid) {
  if (sys.dim() != 2) throw InvalidArgument("Dulac test needs a planar system");
  if (!(R.x1 > R.x0 && R.y1 > R.y0)) throw InvalidArgument("Dulac region must be a non-degenerate rectangle");
  if (grid < 2) throw InvalidArgument("Dulac grid needs at least 2 points per axis");
  static const std::vector<std::string> all = {"1", "1/x", "1/y", "1/(xy)", "exp(x)", "exp(-x)", "exp(y)", "exp(-y)"};
  const auto& names = family.empty() ? all : family;
  const Polynomial T = sys.trace_polynomial();
  for (const auto& name : names) {
    if (std::find(all.begin(), all.end(), name) == all.end()) throw InvalidArgument("unknown Dulac multiplier '" + name + "'");
    const bool needs_x = name == "1/x" || name == "1/(xy)", needs_y = name == "1/y" || name == "1/(xy)";
    if (needs_x && R.x0 <= 0 && R.x1 >= 0) continue;
    if (needs_y && R.y0 <= 0 && R.y1 >= 0) continue;
    int sign = 0;
    double margin = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (int i = 0; i < grid && ok; ++i)
      for (int j = 0; j < grid && ok; ++j) {
        const double x = R.x0 + (R.x1 - R.x0) * i / (grid - 1), y = R.y0 + (R.y1 - R.y0) * j / (grid - 1);
        const double p[2] = {x, y};
        const double f = sys.component(0).evaluate(p) + u.x(), g = sys.component(1).evaluate(p) + u.y();
        const double tr = T.evaluate(p);
        // div(m F) = m tr + m_x f + m_y g. Exponential multipliers are divided out (positive).
        double m = 1, mx = 0, my = 0;
        if (name == "1/x") { m = 1 / x; mx = -1 / (x * x); }
        else if (name == "1/y") { m = 1 / y; my = -1 / (y * y); }
        else if (name == "1/(xy)") { m = 1 / (x * y); mx = -m / x; my = -m / y; }
        else if (name == "exp(x)") { m = 1; mx = 1; }
        else if (name == "exp(-x)") { m = 1; mx = -1; }
        else if (name == "exp(y)") { m = 1; my = 1; }
        else if (name == "exp(-y)") { m = 1; my = -1; }
        const double div = m * tr + mx * f + my * g;
        const int s = div > 0 ? 1 : (div < 0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign)) ok = false;
        sign = s;
        margin = std::min(margin, std::abs(div));
      }
    if (ok && margin >= 1e-6) return DulacCertificate{name, sign, margin};
  }
  return std::nullopt;
}

}  // namespace ffc
