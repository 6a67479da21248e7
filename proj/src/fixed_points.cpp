#include "ffc/fixed_points.hpp"

#include "ffc/errors.hpp"
#include "ffc/roots.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ffc {
namespace {

// Sum of |term| at x; the natural rounding scale of a polynomial value.
double magnitude(const Polynomial& p, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    double v = std::abs(p.coeff(t));
    auto e = p.exponents(t);
    for (std::size_t k = 0; k < e.size(); ++k)
      if (e[k]) v *= std::pow(std::abs(x[k]), e[k]);
    s += v;
  }
  return s;
}

// Residual of F(x) + u relative to its rounding scale.
double relative_residual(const PolySystem& sys, const Eigen::VectorXd& u, const Eigen::VectorXd& x) {
  const std::span<const double> xs(x.data(), sys.dim());
  double worst = 0.0;
  for (std::size_t i = 0; i < sys.dim(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double scale = std::max(1.0, magnitude(sys.component(i), xs) + std::abs(u[ii]));
    worst = std::max(worst, std::abs(sys.component(i).evaluate(xs) + u[ii]) / scale);
  }
  return worst;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Coefficients in y of a planar component, as polynomials in (x, u1, u2); `control` (0 or 1)
// picks which control variable joins the constant coefficient.
std::vector<Polynomial> y_coefficients(const Polynomial& f, std::size_t control) {
  const int m = f.degree_in(1);
  std::vector<std::vector<Term>> terms(static_cast<std::size_t>(std::max(m, 0) + 1));
  for (std::size_t t = 0; t < f.size(); ++t) {
    auto e = f.exponents(t);
    terms[static_cast<std::size_t>(e[1])].push_back(Term{f.coeff(t), {e[0], 0, 0}});
  }
  std::vector<int> ue{0, 0, 0};
  ue[1 + control] = 1;
  terms[0].push_back(Term{1.0, ue});
  std::vector<Polynomial> out;
  for (auto& ts : terms) out.emplace_back(3, std::move(ts));
  return out;
}

using PolyMatrix = std::vector<std::vector<Polynomial>>;

Polynomial det_laplace(const PolyMatrix& S, std::size_t col, unsigned rows_used,
                       std::map<std::pair<std::size_t, unsigned>, Polynomial>& memo) {
  const std::size_t n = S.size();
  if (col == n) return Polynomial::constant(3, 1.0);
  const auto key = std::make_pair(col, rows_used);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  Polynomial acc(3);
  int sign = 1;
  for (std::size_t r = 0; r < n; ++r) {
    if (rows_used & (1u << r)) continue;
    if (!S[r][col].is_zero()) {
      Polynomial minor = det_laplace(S, col + 1, rows_used | (1u << r), memo);
      if (!minor.is_zero()) {
        if (sign > 0) acc += S[r][col] * minor;
        else acc -= S[r][col] * minor;
      }
    }
    sign = -sign;
  }
  memo.emplace(key, acc);
  return acc;
}

std::vector<double> real_parts_near_axis(const std::vector<std::complex<double>>& zs, double rel) {
  std::vector<double> out;
  for (const auto& z : zs)
    if (std::abs(z.imag()) <= rel * std::max(1.0, std::abs(z.real()))) out.push_back(z.real());
  return out;
}

}  // namespace

char to_char(Region r) {
  switch (r) {
    case Region::A: return 'A';
    case Region::B: return 'B';
    case Region::C: return 'C';
    case Region::D: return 'D';
  }
  return '?';
}

Region region_from_char(char c) {
  switch (c) {
    case 'A': return Region::A;
    case 'B': return Region::B;
    case 'C': return Region::C;
    case 'D': return Region::D;
    default: throw InvalidArgument(std::string("unknown region class '") + c + "'");
  }
}

Classification classify(double T, double D) {
  Classification c;
  if (D < 0.0)
    c.region = T <= 0.0 ? Region::C : Region::D;
  else
    c.region = T < 0.0 ? Region::A : Region::B;
  c.borderline = std::abs(T) < kBorderlineTol || std::abs(D) < kBorderlineTol;
  return c;
}

Classification classify(const JacobianEval& jac) { return classify(jac.trace, jac.det); }

bool StateBox::contains(const Eigen::VectorXd& x) const {
  if (lower.size() == 0) return true;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

bool newton_solve(const PolySystem& sys, const Eigen::VectorXd& u, Eigen::VectorXd& x, double tol, int max_iter) {
  const std::size_t n = sys.dim();
  Eigen::VectorXd r(n);
  auto residual = [&](const Eigen::VectorXd& p, double& scale) {
    const std::span<const double> ps(p.data(), n);
    scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      r[ii] = sys.component(i).evaluate(ps) + u[ii];
      scale = std::max(scale, magnitude(sys.component(i), ps) + std::abs(u[ii]));
    }
    return r.cwiseAbs().maxCoeff();
  };
  double scale = 1.0;
  double res = residual(x, scale);
  for (int it = 0; it < max_iter; ++it) {
    if (!std::isfinite(res)) return false;
    if (res <= tol * scale) {
      // One extra step usually buys the last few digits.
      const Eigen::VectorXd dx = sys.jacobian_matrix(x).fullPivLu().solve(-r);
      if (dx.allFinite()) {
        Eigen::VectorXd y = x + dx;
        double s2 = 1.0;
        const Eigen::VectorXd keep = r;
        if (residual(y, s2) < res) x = y;
        else r = keep;
      }
      return true;
    }
    const Eigen::MatrixXd J = sys.jacobian_matrix(x);
    const Eigen::VectorXd dx = J.fullPivLu().solve(-r);
    if (!dx.allFinite()) return false;
    x += dx;
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e12) return false;
    res = residual(x, scale);
  }
  return res <= tol * scale;
}

FixedPointRecord make_record(const PolySystem& sys, const Eigen::VectorXd& location, const Eigen::VectorXd& u) {
  FixedPointRecord rec;
  rec.location = location;
  rec.control = u;
  rec.jac = sys.jacobian_at(location);
  std::vector<double> re;
  for (Eigen::Index i = 0; i < rec.jac.eigenvalues.size(); ++i) re.push_back(rec.jac.eigenvalues[i].real());
  std::sort(re.begin(), re.end());
  for (double v : re) rec.signature += std::abs(v) < kBorderlineTol ? '0' : (v < 0 ? '-' : '+');
  if (sys.dim() == 2) {
    const auto c = classify(rec.jac);
    rec.region = c.region;
    rec.borderline = c.borderline;
    rec.stable = c.region == Region::A;
  } else {
    const bool all_neg = std::all_of(re.begin(), re.end(), [](double v) { return v < 0.0; });
    const bool all_pos = std::all_of(re.begin(), re.end(), [](double v) { return v > 0.0; });
    rec.region = all_neg ? Region::A : all_pos ? Region::B : (rec.jac.trace <= 0.0 ? Region::C : Region::D);
    rec.borderline = rec.signature.find('0') != std::string::npos;
    rec.stable = all_neg;
  }
  return rec;
}

std::vector<Eigen::VectorXd> merge_roots(const PolySystem& sys, const Eigen::VectorXd& u, std::vector<Eigen::VectorXd> pts,
                                         double radius, double tol) {
  std::vector<Eigen::VectorXd> cand = merge_points(std::move(pts), radius);
  // Near a multiple root every point of a flat valley meets the residual tolerance, so one root
  // leaves a trail of candidates. Each candidate is only located to within tol / sigma_min(J)
  // (capped); two candidates inside each other's uncertainty are one root.
  const std::size_t m = cand.size();
  std::vector<double> reach(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::span<const double> xs(cand[i].data(), sys.dim());
    double scale = 1.0;
    for (std::size_t c = 0; c < sys.dim(); ++c)
      scale = std::max(scale, magnitude(sys.component(c), xs) + std::abs(u[static_cast<Eigen::Index>(c)]));
    const Eigen::VectorXd sv = sys.jacobian_matrix(cand[i]).jacobiSvd().singularValues();
    const double cap = 0.1 * std::max(1.0, cand[i].norm());
    const double smin = sv[sv.size() - 1];
    reach[i] = smin > 0.0 ? std::min(cap, 10.0 * tol * scale / smin) : cap;
  }
  std::vector<std::size_t> parent(m);
  for (std::size_t i = 0; i < m; ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if ((cand[i] - cand[j]).norm() <= std::min(reach[i], reach[j])) parent[find(i)] = find(j);
  std::vector<double> res(m);
  for (std::size_t i = 0; i < m; ++i) res[i] = relative_residual(sys, u, cand[i]);
  std::map<std::size_t, std::size_t> best;  // root -> member with the smallest residual
  for (std::size_t i = 0; i < m; ++i) {
    auto [it, fresh] = best.emplace(find(i), i);
    if (!fresh && res[i] < res[it->second]) it->second = i;
  }
  std::vector<Eigen::VectorXd> out;
  for (const auto& [root, i] : best) out.push_back(cand[i]);
  std::sort(out.begin(), out.end(), lex_less);
  return out;
}

std::vector<Eigen::VectorXd> merge_points(std::vector<Eigen::VectorXd> pts, double radius) {
  std::sort(pts.begin(), pts.end(), lex_less);
  std::vector<Eigen::VectorXd> out;
  for (auto& p : pts) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Eigen::VectorXd& q) {
      return (p - q).norm() <= radius * std::max(1.0, q.norm());
    });
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

std::vector<FixedPointRecord> find_fixed_points(const PolySystem& sys, const Eigen::VectorXd& u,
                                                const StateBox& box, const FixedPointOptions& opt) {
  const std::size_t n = sys.dim();
  if (n != 2 && n != 3) throw Unsupported("fixed point search supports dimension 2 or 3");
  if (static_cast<std::size_t>(u.size()) != n) throw InvalidArgument("control has wrong length");
  if (box.lower.size() != static_cast<Eigen::Index>(n) || box.upper.size() != static_cast<Eigen::Index>(n) ||
      !((box.upper - box.lower).array() > 0.0).all())
    throw InvalidArgument("fixed point search needs a non-degenerate state box");

  const int g = opt.grid > 0 ? opt.grid : (n == 2 ? 50 : 20);
  std::vector<Eigen::VectorXd> found;
  Eigen::VectorXd seed(n);
  std::vector<int> idx(n, 0);
  while (true) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double frac = g == 1 ? 0.5 : static_cast<double>(idx[k]) / (g - 1);
      seed[kk] = box.lower[kk] + frac * (box.upper[kk] - box.lower[kk]);
    }
    Eigen::VectorXd x = seed;
    if (newton_solve(sys, u, x, opt.newton_tol, opt.max_iter) && box.contains(x)) found.push_back(x);
    std::size_t k = 0;
    while (k < n && ++idx[k] == g) idx[k++] = 0;
    if (k == n) break;
  }
  if (n == 2 && opt.elimination) {
    PlanarSolver solver(sys);
    if (auto roots = solver.solve(Eigen::Vector2d(u[0], u[1])))
      for (const auto& r : *roots)
        if (box.contains(r)) found.emplace_back(r);
  }
  std::vector<FixedPointRecord> out;
  for (const auto& p : merge_roots(sys, u, std::move(found), opt.dedup_radius, opt.newton_tol))
    out.push_back(make_record(sys, p, u));
  return out;
}

PlanarSolver::PlanarSolver(const PolySystem& sys) : sys_(sys) {
  if (sys.dim() != 2) throw Unsupported("planar solver needs a 2D system");
  const auto p = y_coefficients(sys.component(0), 0);
  const auto q = y_coefficients(sys.component(1), 1);
  const std::size_t m = p.size() - 1, k = q.size() - 1;
  const std::size_t size = m + k;
  if (size == 0) {
    degenerate_ = true;
    return;
  }
  PolyMatrix S(size, std::vector<Polynomial>(size, Polynomial(3)));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j <= m; ++j) S[i][i + j] = p[m - j];
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= k; ++j) S[k + i][i + j] = q[k - j];
  std::map<std::pair<std::size_t, unsigned>, Polynomial> memo;
  resultant_ = det_laplace(S, 0, 0u, memo);
  degenerate_ = resultant_.is_zero() || resultant_.degree_in(0) == 0;
}

std::optional<std::vector<Eigen::Vector2d>> PlanarSolver::solve(const Eigen::Vector2d& u) const {
  if (degenerate_) return std::nullopt;
  const double point[3] = {0.0, u[0], u[1]};
  const double apoint[3] = {1.0, std::abs(u[0]), std::abs(u[1])};
  const std::vector<double> coeffs = resultant_.univariate_in(0, point);
  // Scale of the coefficients before cancellation, for a relative zero test.
  double scale = 0.0;
  for (std::size_t t = 0; t < resultant_.size(); ++t) {
    auto e = resultant_.exponents(t);
    scale = std::max(scale, std::abs(resultant_.coeff(t)) * std::pow(apoint[1], e[1]) * std::pow(apoint[2], e[2]));
  }
  double cmax = 0.0;
  for (double c : coeffs) cmax = std::max(cmax, std::abs(c));
  if (cmax <= 1e-12 * scale) return std::nullopt;

  std::vector<Eigen::VectorXd> found;
  const Eigen::VectorXd uu = u;
  for (double x : real_parts_near_axis(polynomial_roots(coeffs), 1e-3)) {
    const double xp[2] = {x, 0.0};
    std::vector<double> ys;
    for (std::size_t i = 0; i < 2; ++i) {
      std::vector<double> c = sys_.component(i).univariate_in(1, xp);
      c[0] += u[static_cast<Eigen::Index>(i)];
      for (double y : real_parts_near_axis(polynomial_roots(c), 1e-3)) ys.push_back(y);
    }
    for (double y : ys) {
      Eigen::VectorXd z(2);
      z << x, y;
      if (newton_solve(sys_, uu, z, 1e-10, 50)) found.push_back(z);
    }
  }
  std::vector<Eigen::Vector2d> out;
  for (const auto& p : merge_roots(sys_, uu, std::move(found), 1e-6, 1e-10)) out.emplace_back(p[0], p[1]);
  return out;
}

}  // namespace ffc
