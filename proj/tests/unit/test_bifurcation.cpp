#include "doctest.h"

#include "ffc/bifurcation.hpp"
#include "ffc/fixed_points.hpp"
#include "ffc/systems.hpp"

#include <cmath>

using namespace ffc;

namespace {

std::vector<CurveSample> sweep_x(const BifurcationCurve& c) {
  std::vector<CurveSample> out;
  for (const auto& s : c.samples)
    if (s.sweep == 'x') out.push_back(s);
  return out;
}

// f = y, g = -x y^2 + 2/3 x^3 y - x^5/5 has det = (y - x^2)^2: D touches zero without crossing.
PolySystem even_contact() {
  return PolySystem({Polynomial(2, {{1.0, {0, 1}}}),
                     Polynomial(2, {{-1.0, {1, 2}}, {2.0 / 3.0, {3, 1}}, {-0.2, {5, 0}}})});
}

}  // namespace

TEST_CASE("chem curves match the closed forms") {
  const auto chem = bistable_chem();
  const auto hopf = bifurcation_curve(chem, CurveKind::Hopf, -10, 10, 200);
  const auto sn = bifurcation_curve(chem, CurveKind::SaddleNode, -10, 10, 200);
  const auto hx = sweep_x(hopf), sx = sweep_x(sn);
  REQUIRE(hx.size() == 200);
  REQUIRE(sx.size() == 200);
  double err = 0;
  for (const auto& s : hx) {
    const double t = s.t;
    err = std::max(err, std::abs(s.control.x() - (-t * t + 24 * t + 152)));
    err = std::max(err, std::abs(s.control.y() - (-t * t - 16 * t - 76)));
    CHECK(std::abs(chem.jacobian_at(s.state).trace) < 1e-8);
    CHECK(s.valid);
  }
  for (const auto& s : sx) {
    const double t = s.t;
    err = std::max(err, std::abs(s.control.x() - (-t * t * t / 4 + 7 * t * t - 32 * t + 24)));
    err = std::max(err, std::abs(s.control.y() - (-3 * t * t + 16 * t - 12)));
    CHECK(std::abs(chem.jacobian_at(s.state).det) < 1e-8);
    CHECK(s.valid);
  }
  CHECK(err < 1e-8);
  for (const auto& c : {hopf, sn})
    for (const auto& s : c.samples) {
      Eigen::VectorXd out(2);
      chem.evaluate(s.state, out);
      CHECK((s.control + out).norm() < 1e-10);
    }

  const auto at2 = bifurcation_curve(chem, CurveKind::SaddleNode, -10, 10, 201);
  bool found = false;
  for (const auto& s : at2.samples)
    if (s.sweep == 'x' && s.t == 2.0) {
      found = true;
      CHECK(s.control.x() == doctest::Approx(-14.0));
      CHECK(s.control.y() == doctest::Approx(8.0));
    }
  CHECK(found);
  CHECK(bifurcation_curve(chem, CurveKind::HopfAtInfinity, -10, 10, 50).empty());
  CHECK(bifurcation_curve(chem, CurveKind::SaddleNodeAtInfinity, -10, 10, 50).empty());
}

TEST_CASE("brusselator curves") {
  const auto bru = brusselator();
  CHECK(bifurcation_curve(bru, CurveKind::SaddleNode, -5, 5, 200).empty());
  CHECK(bifurcation_curve(bru, CurveKind::SaddleNodeAtInfinity, -5, 5, 200).empty());
  const auto hopf = bifurcation_curve(bru, CurveKind::Hopf, -3, 3, 200);
  const auto hx = sweep_x(hopf);
  REQUIRE(hx.size() >= 199);  // x = 0 has no finite y root
  for (const auto& s : hx) {
    const double t = s.t;
    CHECK(std::abs(s.control.x() - (-t * t * t / 2 + 2 * t - 1)) < 1e-8);
    CHECK(std::abs(s.control.y() - (t * t * t / 2 - t)) < 1e-8);
  }
  // Fixed point escaping along y = c / x^2 as x -> 0.
  const auto inf = bifurcation_curve(bru, CurveKind::HopfAtInfinity, -5, 5, 101);
  // At c = 0 the trace stays bounded along the family, so that sample is not on the curve.
  REQUIRE(inf.samples.size() == 100);
  for (const auto& s : inf.samples) {
    CHECK(s.control.x() == doctest::Approx(-1.0 - s.t));
    CHECK(s.control.y() == doctest::Approx(s.t));
    CHECK(s.valid);
    CHECK(s.state.x() == 0.0);
    CHECK(std::isinf(s.state.y()));
  }
}

TEST_CASE("boundary validity") {
  const auto sys = even_contact();
  CurveSample s;
  s.state = Eigen::Vector2d(1, 1);
  CHECK(std::abs(sys.jacobian_at(s.state).det) < 1e-12);
  CHECK_FALSE(validate_boundary(sys, CurveKind::SaddleNode, s));
  CHECK(bifurcation_curve(sys, CurveKind::SaddleNode, -2, 2, 100).empty());
}

TEST_CASE("y sweep fills vertical tangents") {
  // T = x^2 + y^2 - 1.
  PolySystem circle({Polynomial(2, {{1.0 / 3, {3, 0}}, {-1.0, {1, 0}}}), Polynomial(2, {{1.0 / 3, {0, 3}}})});
  const auto c = bifurcation_curve(circle, CurveKind::Hopf, -1.5, 1.5, 61);
  const auto cx = bifurcation_curve(circle, CurveKind::Hopf, -1.5, 1.5, 61, CurveOptions{false, 3});
  double gap = 0, gap_x = 0;
  for (int k = 0; k < 360; ++k) {
    const Eigen::Vector2d p(std::cos(k * M_PI / 180), std::sin(k * M_PI / 180));
    double d = 1e9, dx = 1e9;
    for (const auto& s : c.samples) d = std::min(d, (s.state - p).norm());
    for (const auto& s : cx.samples) dx = std::min(dx, (s.state - p).norm());
    gap = std::max(gap, d);
    gap_x = std::max(gap_x, dx);
  }
  CHECK(gap < 0.05);
  CHECK(gap_x > 0.1);
  for (std::size_t i = 0; i < c.samples.size(); ++i)
    for (std::size_t j = i + 1; j < c.samples.size(); ++j) CHECK((c.samples[i].control - c.samples[j].control).norm() >= 1e-6);
}

TEST_CASE("fold and Hopf crossing consistency") {
  for (int which = 0; which < 2; ++which) {
    const auto sys = which == 0 ? bistable_chem() : brusselator();
    const PlanarSolver solver(sys);
    const auto sn = bifurcation_curve(sys, CurveKind::SaddleNode, -10, 10, 400);
    int checked = 0;
    for (std::size_t i = 1; i + 1 < sn.samples.size(); ++i) {
      const auto &a = sn.samples[i - 1], &s = sn.samples[i], &b = sn.samples[i + 1];
      if (!s.valid || a.branch != s.branch || b.branch != s.branch || a.sweep != s.sweep || b.sweep != s.sweep) continue;
      const Eigen::Vector2d tangent = b.control - a.control;
      // At a cusp the curve speed vanishes and the three-root wedge gets narrower than the offset.
      if (tangent.norm() / (b.t - a.t) < 3.0) continue;
      const Eigen::Vector2d n(-tangent.y() / tangent.norm(), tangent.x() / tangent.norm());
      const auto plus = solver.solve(s.control + 1e-3 * n), minus = solver.solve(s.control - 1e-3 * n);
      REQUIRE(plus);
      REQUIRE(minus);
      CHECK_MESSAGE(std::abs(static_cast<int>(plus->size()) - static_cast<int>(minus->size())) == 2,
                    s.t << " " << s.sweep << " " << s.control.transpose() << " " << plus->size() << " " << minus->size());
      ++checked;
    }
    CHECK((which == 0 ? checked > 300 : checked == 0));

    const auto hopf = bifurcation_curve(sys, CurveKind::Hopf, -10, 10, 400);
    int hopf_checked = 0;
    for (std::size_t i = 1; i + 1 < hopf.samples.size(); ++i) {
      const auto &a = hopf.samples[i - 1], &s = hopf.samples[i], &b = hopf.samples[i + 1];
      if (!s.valid || a.branch != s.branch || b.branch != s.branch || a.sweep != s.sweep || b.sweep != s.sweep) continue;
      if (sys.jacobian_at(s.state).det <= 1e-3) continue;
      const Eigen::Vector2d tangent = b.control - a.control;
      if (tangent.norm() < 1e-3) continue;
      const Eigen::Vector2d n(-tangent.y() / tangent.norm(), tangent.x() / tangent.norm());
      char side[2];
      for (int sgn = 0; sgn < 2; ++sgn) {
        const auto roots = solver.solve(s.control + (sgn ? -1e-3 : 1e-3) * n);
        REQUIRE(roots);
        double best = 1e18;
        for (const auto& r : *roots)
          if ((r - s.state).norm() < best) {
            best = (r - s.state).norm();
            const auto cls = classify(sys.jacobian_at(r));
            side[sgn] = to_char(cls.region);
          }
      }
      const bool flip = (side[0] == 'A' && side[1] == 'B') || (side[0] == 'B' && side[1] == 'A');
      CHECK(flip);
      ++hopf_checked;
    }
    CHECK(hopf_checked > 50);
  }
}
