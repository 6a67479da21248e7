#include "doctest.h"

#include "ffc/config.hpp"
#include "ffc/errors.hpp"
#include "ffc/json_io.hpp"
#include "ffc/reduction.hpp"
#include "ffc/sindy.hpp"

#include <filesystem>
#include <fstream>

using namespace ffc;

namespace {

std::string rejection(const json& j) {
  try {
    parse_config(j);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config defaults") {
  const auto c = parse_config(json::object());
  REQUIRE(c.system.has_value());
  CHECK(c.system->kind == SystemKind::BistableChem);
  CHECK(c.rank == 2);
  CHECK(c.sindy.lambda == doctest::Approx(0.05));
  CHECK(c.analysis.resolution == 128);
  CHECK(c.analysis.lower.size() == 2);
  CHECK(c.objective.epsilon == doctest::Approx(0.1));
  CHECK(c.objective.hold == doctest::Approx(5.0));
  CHECK(c.workers == 1);
}

TEST_CASE("config rejections name the key") {
  CHECK(rejection({{"bogus", 1}}).find("bogus") != std::string::npos);
  CHECK(rejection({{"sindy", {{"lamda", 0.1}}}}).find("sindy.lamda") != std::string::npos);
  CHECK(rejection({{"analysis", {{"probe", {{"per_axes", 3}}}}}}).find("analysis.probe.per_axes") != std::string::npos);
  CHECK(rejection({{"reduction", {{"rank", 4}}}}).find("reduction.rank") != std::string::npos);
  CHECK(rejection({{"reduction", {{"centering", true}}}}).find("reduction.centering") != std::string::npos);
  CHECK(rejection({{"sindy", {{"lambda", -1}}}}).find("sindy.lambda") != std::string::npos);
  CHECK(rejection({{"system", {{"kind", "pendulum"}}}}).find("system.kind") != std::string::npos);
  CHECK(rejection({{"system", {{"kind", "hopfield"}, {"n", 30}}}}).find("n") != std::string::npos);
  CHECK(rejection({{"analysis", {{"lower", {0, 0}}}}}).find("analysis.upper") != std::string::npos);
  CHECK(rejection({{"analysis", {{"lower", {0, 0, 0}}, {"upper", {1, 1, 1}}}}}).find("analysis.lower") != std::string::npos);
  CHECK(rejection({{"analysis", {{"box", 1}, {"lower", {0, 0}}, {"upper", {1, 1}}}}}).find("analysis.box") != std::string::npos);
  CHECK(rejection({{"objective", {{"reference", "both"}}}}).find("objective.reference") != std::string::npos);
  CHECK(rejection({{"objective", {{"targets", {0, -1}}}}}).find("objective.targets") != std::string::npos);
  CHECK(rejection({{"seed", -3}}).find("seed") != std::string::npos);
  CHECK(rejection({{"system", {{"csv", "a.csv"}, {"kind", "brusselator"}}}}).find("system.csv") != std::string::npos);
  CHECK(rejection({{"system", {{"csv", "a.csv"}}}, {"ensemble", {{"box", 2}}}}).find("ensemble") != std::string::npos);
  CHECK(rejection({{"fig1", {{"densities", {0.0}}}}}).find("fig1.densities") != std::string::npos);
  CHECK(rejection({{"sindy", {{"model", "exact"}}}}).find("sindy.model") != std::string::npos);
}

TEST_CASE("config round trip through its resolved form") {
  const json in = {{"system", {{"kind", "hopfield"}, {"n", 100}, {"pairs", 2}}},
                   {"ensemble", {{"count", 12}, {"box", 10}, {"stride", 5}}},
                   {"sindy", {{"lambda", 1e-6}, {"skip_time", 3}}},
                   {"analysis", {{"box", 15}, {"state_box", 20}}},
                   {"objective", {{"targets", {0, 1, 2, 3, 0}}, {"reference", "truth"}}},
                   {"seed", 7}};
  const auto c = parse_config(in);
  CHECK(c.system->params.seed == 7);
  const auto resolved = config_to_json(c);
  const auto again = parse_config(resolved);
  CHECK(config_to_json(again) == resolved);
}

TEST_CASE("seed flag follows into the system unless the system fixed it") {
  auto c = parse_config(json::object());
  apply_seed(c, 11);
  CHECK(c.seed == 11);
  CHECK(c.system->params.seed == 11);
  auto d = parse_config({{"system", {{"seed", 3}}}});
  apply_seed(d, 11);
  CHECK(d.system->params.seed == 3);
}

TEST_CASE("help lists every section") {
  const auto h = config_help();
  for (const char* k : {"system.kind", "ensemble", "reduction.rank", "sindy", "analysis", "objective", "planner", "execute",
                        "fig1", "seed", "output", "workers"})
    CHECK(h.find(k) != std::string::npos);
}

TEST_CASE("model json round trip is exact") {
  const auto m = system_to_model(bistable_chem(), 3);
  CHECK(m.support_size() == 6);
  const auto back = model_from_json(json::parse(model_to_json(m).dump()));
  CHECK(back.library.columns == m.library.columns);
  CHECK((back.coefficients - m.coefficients).cwiseAbs().maxCoeff() == 0.0);
  const auto sys = model_to_system(back);
  const Eigen::Vector2d x(1.3, -0.7);
  CHECK((sys(x) - bistable_chem()(x)).norm() == 0.0);
}

TEST_CASE("basis and schedule json round trips") {
  ReducedBasis b;
  b.modes = Eigen::MatrixXd::Identity(4, 2);
  b.singular_values = Eigen::Vector4d(3, 2, 1e-17, 0);
  const auto bb = basis_from_json(json::parse(basis_to_json(b).dump()));
  CHECK(bb.modes == b.modes);
  CHECK(bb.singular_values == b.singular_values);

  ControlSchedule s;
  Segment t;
  t.u = Eigen::Vector2d(0.1 / 3.0, -2.0);
  t.duration = 1.7;
  t.purpose = SegmentPurpose::Transition;
  t.target = 1;
  t.tier = 2;
  t.margin = 0.25;
  t.via_saddle_node = true;
  t.rationale = "sufficient cell";
  t.lifted = Eigen::Vector4d(0.1 / 3.0, -2.0, 0, 0);
  s.segments = {t};
  Segment h;
  h.u = Eigen::Vector2d::Zero();
  h.duration = 6.0;
  h.target = 1;
  s.segments.push_back(h);
  const auto back = schedule_from_json(json::parse(schedule_to_json(s).dump()));
  REQUIRE(back.segments.size() == 2);
  CHECK(back.segments[0].u == t.u);
  CHECK(back.segments[0].duration == t.duration);
  CHECK(back.segments[0].purpose == SegmentPurpose::Transition);
  CHECK(back.segments[0].via_saddle_node);
  CHECK(back.segments[0].rationale == t.rationale);
  REQUIRE(back.segments[0].lifted.has_value());
  CHECK(*back.segments[0].lifted == *t.lifted);
  CHECK_FALSE(back.segments[1].lifted.has_value());
  CHECK(back.segments[1].purpose == SegmentPurpose::Hold);
}

TEST_CASE("malformed json files report line and column") {
  const auto dir = std::filesystem::temp_directory_path() / "ffc_config_test";
  std::filesystem::create_directories(dir);
  const auto file = (dir / "bad.json").string();
  std::ofstream(file) << "{\n  \"seed\": 1,\n  oops\n}\n";
  try {
    read_json_file(file);
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() > 0);
  }
  CHECK_THROWS_AS(model_from_json({{"vars", 2}}), ParseError);
  std::filesystem::remove_all(dir);
}
