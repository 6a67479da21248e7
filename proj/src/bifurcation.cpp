#include "ffc/bifurcation.hpp"

#include "ffc/errors.hpp"
#include "ffc/roots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace ffc {

std::string to_string(CurveKind k) {
  switch (k) {
    case CurveKind::Hopf: return "hopf";
    case CurveKind::HopfAtInfinity: return "hopf_at_infinity";
    case CurveKind::SaddleNode: return "saddle_node";
    case CurveKind::SaddleNodeAtInfinity: return "saddle_node_at_infinity";
  }
  return "?";
}

CurveKind curve_kind_from_string(const std::string& s) {
  if (s == "hopf") return CurveKind::Hopf;
  if (s == "hopf_at_infinity") return CurveKind::HopfAtInfinity;
  if (s == "saddle_node") return CurveKind::SaddleNode;
  if (s == "saddle_node_at_infinity") return CurveKind::SaddleNodeAtInfinity;
  throw InvalidArgument("unknown curve kind '" + s + "'");
}

namespace {

Polynomial constraint(const PolySystem& sys, CurveKind kind) {
  const bool hopf = kind == CurveKind::Hopf || kind == CurveKind::HopfAtInfinity;
  return hopf ? sys.trace_polynomial() : sys.det_polynomial();
}

Eigen::Vector2d intrinsic(const PolySystem& sys, const Eigen::Vector2d& x) {
  const Eigen::VectorXd xv = x;
  Eigen::VectorXd out(2);
  sys.evaluate(xv, out);
  return out;
}

// Greedy nearest matching of this step's roots to the previous step's, by y value.
void chain(std::vector<CurveSample>& prev, std::vector<CurveSample>& cur, int& next_branch, int coord) {
  std::vector<bool> used(prev.size(), false);
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < cur.size(); ++i) sep = std::min(sep, std::abs(cur[i].state[coord] - cur[i - 1].state[coord]));
  for (auto& c : cur) {
    int best = -1;
    double bd = sep / 2;
    if (!std::isfinite(bd)) bd = std::numeric_limits<double>::max();
    for (std::size_t j = 0; j < prev.size(); ++j) {
      const double d = std::abs(prev[j].state[coord] - c.state[coord]);
      if (!used[j] && d < bd) {
        bd = d;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = true;
      c.branch = prev[static_cast<std::size_t>(best)].branch;
    } else {
      c.branch = next_branch++;
    }
  }
}

void finite_curve(const PolySystem& sys, const Polynomial& Q, BifurcationCurve& out, double t0, double t1, int n,
                  const CurveOptions& opt) {
  const Polynomial Qx = Q.derivative(0), Qy = Q.derivative(1);
  int next_branch = 0;
  std::vector<CurveSample> xs, ys;
  for (int pass = 0; pass < (opt.y_sweep ? 2 : 1); ++pass) {
    // pass 0: x = t, roots in y; pass 1: y = t, roots in x.
    const std::size_t free_var = pass == 0 ? 1 : 0;
    std::vector<CurveSample> prev;
    for (int i = 0; i < n; ++i) {
      const double t = n == 1 ? t0 : t0 + (t1 - t0) * i / (n - 1);
      double pt[2] = {0, 0};
      pt[1 - free_var] = t;
      const auto coeffs = Q.univariate_in(free_var, pt);
      std::vector<CurveSample> cur;
      if (!is_zero_polynomial(coeffs)) {
        for (const auto& r : real_roots(coeffs)) {
          if (!r.sign_change) continue;
          CurveSample s;
          s.t = t;
          s.state[1 - free_var] = t;
          s.state[free_var] = r.value;
          if (pass == 1) {
            const double p[2] = {s.state.x(), s.state.y()};
            if (std::abs(Qy.evaluate(p)) >= std::abs(Qx.evaluate(p))) continue;
          }
          s.control = -intrinsic(sys, s.state);
          s.sweep = pass == 0 ? 'x' : 'y';
          cur.push_back(s);
        }
      }
      chain(prev, cur, next_branch, static_cast<int>(free_var));
      prev = cur;
      (pass == 0 ? xs : ys).insert((pass == 0 ? xs : ys).end(), cur.begin(), cur.end());
    }
  }
  auto by_branch = [](const CurveSample& a, const CurveSample& b) {
    return a.branch != b.branch ? a.branch < b.branch : a.t < b.t;
  };
  std::stable_sort(xs.begin(), xs.end(), by_branch);
  std::stable_sort(ys.begin(), ys.end(), by_branch);
  for (auto& s : xs) {
    s.valid = validate_boundary(sys, out.kind, s);
    out.samples.push_back(s);
  }
  for (auto& s : ys) {
    const bool dup = std::any_of(xs.begin(), xs.end(),
                                 [&](const CurveSample& x) { return (x.control - s.control).norm() < 1e-6; });
    if (dup) continue;
    s.valid = validate_boundary(sys, out.kind, s);
    out.samples.push_back(s);
  }
}

// Substitutes x_a = x0 + s, x_b = c s^-m into P and multiplies by s^shift; variables (x0, c, s).
Polynomial laurent(const Polynomial& P, std::size_t a, int m, int shift) {
  const Polynomial x0s = Polynomial::variable(3, 0) + Polynomial::variable(3, 2);
  Polynomial out(3);
  for (std::size_t k = 0; k < P.size(); ++k) {
    const auto e = P.exponents(k);
    const int i = e[a], j = e[1 - a];
    Polynomial term = Polynomial::monomial(P.coeff(k), {0, j, shift - m * j});
    for (int p = 0; p < i; ++p) term = term * x0s;
    out += term;
  }
  return out;
}

// Coefficient polynomials in (x0, c) grouped by power of s.
std::map<int, Polynomial> by_s_power(const Polynomial& P) {
  std::map<int, Polynomial> out;
  for (std::size_t k = 0; k < P.size(); ++k) {
    const auto e = P.exponents(k);
    auto it = out.try_emplace(e[2], Polynomial(2)).first;
    it->second += Polynomial::monomial(P.coeff(k), {e[0], e[1]});
  }
  return out;
}

// Univariate coefficient lists in x0, one per (s power, c power) pair, for negative Laurent powers.
std::vector<std::vector<double>> vanishing_conditions(const std::map<int, Polynomial>& groups, int shift) {
  std::vector<std::vector<double>> conds;
  for (const auto& [k, poly] : groups) {
    if (k >= shift) continue;
    std::map<int, std::vector<double>> per_c;
    for (std::size_t t = 0; t < poly.size(); ++t) {
      const auto e = poly.exponents(t);
      auto& v = per_c[e[1]];
      if (v.size() <= static_cast<std::size_t>(e[0])) v.resize(static_cast<std::size_t>(e[0]) + 1, 0.0);
      v[static_cast<std::size_t>(e[0])] += poly.coeff(t);
    }
    for (auto& [cp, v] : per_c) conds.push_back(v);
  }
  return conds;
}

double poly2(const Polynomial& p, double x0, double c) {
  const double pt[2] = {x0, c};
  return p.evaluate(pt);
}

void infinity_curve(const PolySystem& sys, const Polynomial& Q, BifurcationCurve& out, double t0, double t1, int n,
                    const CurveOptions& opt) {
  int branch = 0;
  for (std::size_t a = 0; a < 2; ++a) {
    const std::size_t b = 1 - a;
    const int deg_b = std::max({sys.component(0).degree_in(b), sys.component(1).degree_in(b), Q.degree_in(b)});
    if (deg_b == 0) continue;
    for (int m = 1; m <= opt.max_laurent_order; ++m) {
      const int shift = m * deg_b;
      const auto fg0 = by_s_power(laurent(sys.component(0), a, m, shift));
      const auto fg1 = by_s_power(laurent(sys.component(1), a, m, shift));
      const auto qg = by_s_power(laurent(Q, a, m, shift));
      auto conds = vanishing_conditions(fg0, shift);
      const auto c1 = vanishing_conditions(fg1, shift);
      conds.insert(conds.end(), c1.begin(), c1.end());
      std::vector<double> candidates;
      const auto first = std::find_if(conds.begin(), conds.end(), [](const auto& v) { return !is_zero_polynomial(v); });
      if (first == conds.end()) continue;  // x0 unconstrained: not a curve
      for (const auto& r : real_roots(*first)) {
        bool ok = true;
        for (const auto& v : conds) {
          double scale = 0;
          for (double cv : v) scale = std::max(scale, std::abs(cv));
          if (std::abs(horner(v, r.value)) > 1e-9 * std::max(1.0, scale) * std::pow(std::max(1.0, std::abs(r.value)), double(v.size())))
            ok = false;
        }
        if (ok) candidates.push_back(std::abs(r.value) < 1e-12 ? 0.0 : r.value);
      }
      auto find_at = [](const std::map<int, Polynomial>& g, int k) {
        auto it = g.find(k);
        return it == g.end() ? Polynomial(2) : it->second;
      };
      const Polynomial u1 = -1.0 * find_at(fg0, shift), u2 = -1.0 * find_at(fg1, shift);
      for (double x0 : candidates) {
        bool any = false;
        for (int i = 0; i < n; ++i) {
          const double c = n == 1 ? t0 : t0 + (t1 - t0) * i / (n - 1);
          // Leading Laurent power of the constraint along the family.
          int lead = std::numeric_limits<int>::max();
          for (const auto& [k, poly] : qg) {
            double scale = 0;
            for (std::size_t t = 0; t < poly.size(); ++t) scale = std::max(scale, std::abs(poly.coeff(t)));
            if (std::abs(poly2(poly, x0, c)) > 1e-12 * std::max(scale, 1e-300)) {
              lead = k - shift;
              break;
            }
          }
          if (lead >= 0) continue;  // constraint stays bounded: no bifurcation at infinity
          CurveSample s;
          s.t = c;
          s.sweep = 'c';
          s.branch = branch;
          s.state[a] = x0;
          s.state[b] = c >= 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
          s.control = Eigen::Vector2d(poly2(u1, x0, c), poly2(u2, x0, c));
          s.valid = (-lead) % 2 == 1;
          const bool dup = std::any_of(out.samples.begin(), out.samples.end(), [&](const CurveSample& o) {
            return (o.control - s.control).norm() < 1e-6;
          });
          if (dup) continue;
          out.samples.push_back(s);
          any = true;
        }
        if (any) ++branch;
      }
    }
  }
}

}  // namespace

BifurcationCurve bifurcation_curve(const PolySystem& sys, CurveKind kind, double t0, double t1, int samples,
                                   const CurveOptions& options) {
  if (sys.dim() != 2) throw InvalidArgument("bifurcation curves need a planar system");
  if (samples < 1) throw InvalidArgument("curve sample count must be positive");
  if (!(t1 >= t0)) throw InvalidArgument("curve t range is empty");
  BifurcationCurve out;
  out.kind = kind;
  const Polynomial Q = constraint(sys, kind);
  if (at_infinity(kind))
    infinity_curve(sys, Q, out, t0, t1, samples, options);
  else
    finite_curve(sys, Q, out, t0, t1, samples, options);
  return out;
}

bool validate_boundary(const PolySystem& sys, CurveKind kind, const CurveSample& s) {
  if (at_infinity(kind)) throw InvalidArgument("validate_boundary applies to finite curves");
  const Polynomial Q = constraint(sys, kind);
  const double p[2] = {s.state.x(), s.state.y()};
  Eigen::Vector2d g(Q.derivative(0).evaluate(p), Q.derivative(1).evaluate(p));
  if (!(g.norm() > 0.0)) return false;
  g /= g.norm();
  const Eigen::Vector2d a = s.state + 1e-4 * g, b = s.state - 1e-4 * g;
  const double qa = Q.evaluate(Eigen::VectorXd(a)), qb = Q.evaluate(Eigen::VectorXd(b));
  return (qa > 0 && qb < 0) || (qa < 0 && qb > 0);
}

void write_curves_csv(std::ostream& os, const std::vector<BifurcationCurve>& curves) {
  os << "kind,t,x,y,u1,u2,valid,sweep,branch\n";
  char buf[512];
  for (const auto& c : curves)
    for (const auto& s : c.samples) {
      std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%c,%d\n", to_string(c.kind).c_str(), s.t,
                    s.state.x(), s.state.y(), s.control.x(), s.control.y(), s.valid ? 1 : 0, s.sweep, s.branch);
      os << buf;
    }
}

double distance_to_curve(const BifurcationCurve& curve, const Eigen::Vector2d& u, double max_gap) {
  double best = std::numeric_limits<double>::infinity();
  const auto& S = curve.samples;
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (!S[i].valid) continue;
    best = std::min(best, (S[i].control - u).norm());
    if (i + 1 < S.size() && S[i + 1].valid && S[i + 1].branch == S[i].branch && S[i + 1].sweep == S[i].sweep) {
      const Eigen::Vector2d p = S[i].control, q = S[i + 1].control;
      const Eigen::Vector2d d = q - p;
      if (d.norm() > max_gap || d.squaredNorm() == 0.0) continue;
      const double t = std::clamp((u - p).dot(d) / d.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (p + t * d - u).norm());
    }
  }
  return best;
}

}  // namespace ffc
