#include "doctest.h"

#include "ffc/errors.hpp"
#include "ffc/reduction.hpp"
#include "ffc/simulation.hpp"
#include "ffc/systems.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace ffc;

namespace {

PolySystem decay1() { return PolySystem({Polynomial::monomial(-1.0, {1})}); }

double decay_error(double dt) {
  const auto tr = integrate(decay1(), Eigen::VectorXd::Ones(1), dt, 1.0);
  return std::abs(tr.states(tr.samples() - 1, 0) - std::exp(-1.0));
}

// Scalar Hopfield reduction a' = -a + tanh_poly(g a); positive root by bisection.
double bisect_amplitude(double g) {
  auto f = [&](double a) { return -a + tanh_poly(g * a); };
  double lo = 1e-6, hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    if ((f(m) > 0) == (f(lo) > 0)) lo = m;
    else hi = m;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("rk4 on linear decay") {
  const auto tr = integrate(decay1(), Eigen::VectorXd::Ones(1), 0.01, 10.0);
  CHECK(tr.samples() == 1001);
  CHECK(std::abs(tr.states(1000, 0) - std::exp(-10.0)) < 1e-4);
  CHECK(tr.derivs.has_value());
  CHECK((*tr.derivs)(0, 0) == -1.0);
  for (double dt : {0.2, 0.1, 0.05}) CHECK(decay_error(dt) / decay_error(dt / 2) >= 14.0);
  const auto two = integrate(decay1(), Eigen::VectorXd::Ones(1), 0.5, 0.5);
  CHECK(two.samples() == 2);
  CHECK_THROWS_AS(integrate(decay1(), Eigen::VectorXd::Ones(1), 1.0, 0.5), InvalidArgument);
}

TEST_CASE("uniform time grid") {
  const auto tr = integrate(decay1(), Eigen::VectorXd::Ones(1), 0.01, 3.0);
  for (Eigen::Index i = 1; i < tr.samples(); ++i) CHECK(std::abs(tr.times[i] - tr.times[i - 1] - 0.01) < 1e-12);
}

TEST_CASE("divergence carries the partial trajectory") {
  PolySystem blow({Polynomial::monomial(1.0, {2})});
  try {
    integrate(blow, Eigen::VectorXd::Ones(1), 0.01, 5.0);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.partial().samples() > 10);
    CHECK(e.partial().states.allFinite());
  }
}

TEST_CASE("piecewise constant control and schedule extension") {
  ControlSchedule s;
  Segment a, b;
  a.u = Eigen::VectorXd::Constant(1, 1.0);
  a.duration = 1.0;
  b.u = Eigen::VectorXd::Constant(1, -1.0);
  b.duration = 1.0;
  s.segments = {a, b};
  PolySystem zero({Polynomial(1)});
  const auto tr = integrate(zero, Eigen::VectorXd::Zero(1), s, 0.01, 3.0);
  CHECK(tr.schedule_extended);
  CHECK(std::abs(tr.states(100, 0) - 1.0) < 1e-12);
  CHECK(std::abs(tr.states(300, 0) - (-1.0)) < 1e-12);
  CHECK(tr.control_log(50, 0) == 1.0);
  CHECK(tr.control_log(150, 0) == -1.0);
}

TEST_CASE("chem trajectories settle on the two sinks") {
  auto chem = bistable_chem();
  auto tr = integrate(chem, Eigen::Vector2d(0.1, 0.1), 0.01, 50.0);
  CHECK((tr.states.bottomRows(1).transpose() - Eigen::Vector2d(0, 0)).norm() < 1e-3);
  tr = integrate(chem, Eigen::Vector2d(7, 5), 0.01, 50.0);
  CHECK((tr.states.bottomRows(1).transpose() - Eigen::Vector2d(6, 4.5)).norm() < 1e-3);

  SystemSpec spec;
  const auto gen = generate_system(spec);
  Sampler sm{Eigen::Vector2d(-1, -1), Eigen::Vector2d(8, 8), 100, 5};
  const auto ens = ensemble(gen, sm, 0.01, 50.0);
  int near0 = 0, near6 = 0;
  for (const auto& t : ens.trajectories) {
    const Eigen::Vector2d end = t.states.bottomRows(1).transpose();
    if ((end - Eigen::Vector2d(0, 0)).norm() < 1e-2) ++near0;
    else if ((end - Eigen::Vector2d(6, 4.5)).norm() < 1e-2) ++near6;
  }
  CHECK(near0 + near6 + static_cast<int>(ens.excluded.size()) == 100);
  CHECK(near0 > 0);
  CHECK(near6 > 0);
}

TEST_CASE("ensemble determinism") {
  SystemSpec spec;
  spec.kind = SystemKind::LiftedRandom;
  spec.params.n = 10;
  spec.params.seed = 3;
  const auto gen = generate_system(spec);
  Sampler sm{Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2), 4, 17};
  const auto a = ensemble(gen, sm, 0.01, 2.0);
  const auto b = ensemble(generate_system(spec), sm, 0.01, 2.0);
  REQUIRE(a.trajectories.size() == b.trajectories.size());
  CHECK(a.seeds == b.seeds);
  for (std::size_t i = 0; i < a.trajectories.size(); ++i)
    CHECK((a.trajectories[i].states - b.trajectories[i].states).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hopfield memories are fixed points and the field is odd") {
  SystemSpec spec;
  spec.kind = SystemKind::Hopfield;
  spec.params.n = 100;
  spec.params.pairs = 2;
  spec.params.seed = 7;
  const auto gen = generate_system(spec);
  const auto& hop = dynamic_cast<const HopfieldField&>(*gen.field);
  CHECK(hop.memory_amplitude() == doctest::Approx(bisect_amplitude(1.5)).epsilon(1e-12));
  const Eigen::VectorXd x0 = gen.truth.attractors[0];
  const auto tr = integrate(*gen.field, x0, ControlSchedule::constant(Eigen::VectorXd::Zero(100), 10.0), 0.01, 10.0);
  CHECK((tr.states.bottomRows(1).transpose() - x0).cwiseAbs().maxCoeff() < 1e-6);

  const Eigen::VectorXd start = Eigen::VectorXd::LinSpaced(100, -1.0, 0.7);
  const auto sched = ControlSchedule::constant(Eigen::VectorXd::Zero(100), 3.0);
  const auto p = integrate(*gen.field, start, sched, 0.01, 3.0);
  const auto m = integrate(*gen.field, Eigen::VectorXd(-start), sched, 0.01, 3.0);
  CHECK((p.states + m.states).cwiseAbs().maxCoeff() == 0.0);

  // Latent polynomial reproduces the projected field.
  const Eigen::MatrixXd& B = *gen.truth.subspace;
  const Eigen::Vector2d z(0.7, -1.9);
  const Eigen::VectorXd x = B * z;
  const Eigen::VectorXd proj = B.transpose() * (*gen.field)(x);
  CHECK((proj - gen.truth.latent->eval_field(z)).norm() < 1e-10);
  CHECK(((*gen.field)(x) - B * proj).norm() < 1e-10);
}

TEST_CASE("lifted random: off-subspace component decays") {
  SystemSpec spec;
  spec.kind = SystemKind::LiftedRandom;
  spec.params.n = 10;
  spec.params.seed = 3;
  const auto gen = generate_system(spec);
  CHECK(gen.truth.attractors.size() >= 2);
  const Eigen::MatrixXd& Q = *gen.truth.subspace;
  Eigen::VectorXd x0 = Eigen::VectorXd::LinSpaced(10, -1, 1);
  const auto tr = integrate(*gen.field, x0, ControlSchedule::constant(Eigen::VectorXd::Zero(10), 20.0), 0.01, 20.0);
  const Eigen::VectorXd end = tr.states.bottomRows(1).transpose();
  const double off0 = (x0 - Q * (Q.transpose() * x0)).norm();
  const double off = (end - Q * (Q.transpose() * end)).norm();
  CHECK(off < 1e-6);
  CHECK(off == doctest::Approx(off0 * std::exp(-20.0)).epsilon(1e-3));
}

TEST_CASE("dense random stays bounded from the unit box scaled by two") {
  int diverged = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SystemSpec spec;
    spec.kind = SystemKind::DenseRandom;
    spec.params.n = 6;
    spec.params.density = seed % 2 ? 1.0 : 0.3;
    spec.params.seed = seed;
    const auto gen = generate_system(spec);
    Eigen::VectorXd x0(6);
    for (Eigen::Index i = 0; i < 6; ++i) x0[i] = ((seed * 7 + static_cast<std::uint64_t>(i) * 3) % 5 - 2.0);
    IntegrateOptions io;
    io.record_derivs = false;
    try {
      integrate(*gen.field, x0, ControlSchedule::constant(Eigen::VectorXd::Zero(6), 10.0), 0.01, 10.0, io);
    } catch (const DivergenceError&) {
      ++diverged;
    }
  }
  CHECK(diverged == 0);
}

TEST_CASE("dense field matches the monomial form") {
  SystemSpec spec;
  spec.kind = SystemKind::DenseRandom;
  spec.params.n = 5;
  spec.params.density = 0.5;
  spec.params.seed = 4;
  const auto gen = generate_system(spec);
  REQUIRE(gen.poly.has_value());
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1.2, 0.9);
  CHECK(((*gen.field)(x) - gen.poly->eval_field(x)).norm() < 1e-12);
}

TEST_CASE("trajectory csv round trip and parse errors") {
  const auto dir = std::filesystem::temp_directory_path() / "ffc_csv_test";
  std::filesystem::create_directories(dir);
  const auto tr = integrate(bistable_chem(), Eigen::Vector2d(1, 2), 0.01, 0.5);
  const auto path = (dir / "t.csv").string();
  write_trajectory_csv(path, tr);
  const auto back = read_trajectory_csv(path);
  CHECK(back.states == tr.states);
  CHECK(back.times == tr.times);
  REQUIRE(back.derivs.has_value());
  CHECK(*back.derivs == *tr.derivs);

  {
    std::ofstream bad(dir / "bad.csv");
    bad << "t,x1,x2\n0,1,2\n0.1,1,oops\n";
  }
  try {
    read_trajectory_csv((dir / "bad.csv").string());
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() == 3);
  }
  std::filesystem::remove_all(dir);
}
