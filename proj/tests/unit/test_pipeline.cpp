#include "doctest.h"

#include "ffc/errors.hpp"
#include "ffc/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace ffc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ffc_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json small_chem() {
  return {{"system", {{"kind", "bistable_chem"}}},
          {"ensemble", {{"count", 8}, {"lower", {0, 0}}, {"upper", {8, 6}}, {"horizon", 4}}},
          {"sindy", {{"derivatives", "exact"}, {"lambda", 0.01}}},
          {"analysis", {{"box", 200}, {"state_box", 20}, {"resolution", 64}, {"cycle_grid", 4}, {"curve_samples", 50}}},
          {"objective", {{"targets", {0, 1, 0}}}}};
}

RunContext context(const json& j, const fs::path& dir) {
  RunContext ctx;
  ctx.config = parse_config(j);
  ctx.dir = dir.string();
  return ctx;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return files;
}

json manifest(const fs::path& dir) { return read_json_file((dir / "manifest.json").string()); }

}  // namespace

TEST_CASE("pipeline equals the composition of its stages, byte for byte") {
  const auto a = scratch("whole"), b = scratch("parts");
  REQUIRE(run_pipeline(context(small_chem(), a)) == kSuccess);
  for (auto s : {Stage::Simulate, Stage::Reduce, Stage::Fit, Stage::Analyze, Stage::Plan, Stage::Execute})
    REQUIRE(run_stage(s, context(small_chem(), b)) == kSuccess);
  const auto fa = snapshot(a), fb = snapshot(b);
  CHECK(fa.size() == fb.size());
  for (const auto& [name, bytes] : fa) {
    INFO(name);
    REQUIRE(fb.count(name));
    CHECK(fb.at(name) == bytes);
  }
  for (const char* f : {"ensemble/ensemble.json", "basis.json", "variance.csv", "model.json", "analysis.json", "regions.csv",
                        "cycles.csv", "curves.csv", "schedule.json", "targets.json", "verify.json", "predicted.csv",
                        "actual.csv", "manifest.json"})
    CHECK(fa.count(f) == 1);
  const auto m = manifest(a);
  CHECK(m.at("stages").at("execute").at("status") == "ok");
  CHECK(m.at("config_hash").get<std::string>().size() == 16);

  // A rerun reproduces every artifact.
  REQUIRE(run_pipeline(context(small_chem(), a)) == kSuccess);
  CHECK(snapshot(a) == fa);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("fitted chem model keeps the true support") {
  const auto dir = scratch("support");
  auto j = small_chem();
  j.erase("objective");
  REQUIRE(run_pipeline(context(j, dir)) == kSuccess);
  const auto m = read_json_file((dir / "model.json").string());
  int nonzero = 0;
  for (const auto& t : m.at("terms"))
    for (const auto& c : t.at("coefficients")) nonzero += c.get<double>() != 0.0;
  CHECK(nonzero == 6);
  CHECK(manifest(dir).at("stages").at("plan").at("status") == "skipped");
  fs::remove_all(dir);
}

TEST_CASE("ingested csv runs through fit and analysis") {
  const auto src = scratch("dump"), dir = scratch("ingest");
  REQUIRE(run_stage(Stage::Simulate, context(small_chem(), src)) == kSuccess);
  json files = json::array();
  for (int i = 0; i < 8; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "traj_%04d.csv", i);
    files.push_back((src / "ensemble" / name).string());
  }
  json j = small_chem();
  j["system"] = {{"csv", files}};
  j.erase("ensemble");
  REQUIRE(run_pipeline(context(j, dir)) == kSuccess);
  const auto m = manifest(dir);
  CHECK(m.at("stages").at("fit").at("support") == 6);
  CHECK(m.at("stages").at("execute").at("status") == "skipped");
  CHECK(fs::exists(dir / "schedule.json"));
  fs::remove_all(src);
  fs::remove_all(dir);
}

TEST_CASE("malformed csv is an input error with row and column") {
  const auto dir = scratch("badcsv");
  const auto file = dir / "bad.csv";
  std::ofstream(file) << "t,x1,x2\n0,1,2\n0.01,1,oops\n";
  json j = {{"system", {{"csv", file.string()}}}};
  const auto ctx = context(j, dir / "run");
  CHECK(run_stage(Stage::Simulate, ctx) == kInputError);
  const auto err = manifest(dir / "run").at("stages").at("simulate").at("error").get<std::string>();
  CHECK(err.find("row 3") != std::string::npos);
  CHECK(err.find("column 3") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("unreachable objective is a planning failure with evidence") {
  const auto dir = scratch("unreachable");
  auto j = small_chem();
  j["analysis"]["box"] = 0.1;  // no fold inside the box
  const auto ctx = context(j, dir);
  for (auto s : {Stage::Simulate, Stage::Reduce, Stage::Fit}) REQUIRE(run_stage(s, ctx) == kSuccess);
  CHECK(run_stage(Stage::Plan, ctx) == kPlanningFailed);
  const auto report = read_json_file((dir / "plan.json").string());
  CHECK(report.at("status") == "failed");
  CHECK(!report.at("error").get<std::string>().empty());
  CHECK(report.at("legs").size() >= 1);
  CHECK(manifest(dir).at("stages").at("plan").at("status") == "failed");
  fs::remove_all(dir);
}

TEST_CASE("stage order and exit codes") {
  const auto dir = scratch("order");
  const auto ctx = context(small_chem(), dir);
  CHECK(run_stage(Stage::Fit, ctx) == kInputError);  // no ensemble yet
  CHECK(manifest(dir).at("stages").at("fit").at("status") == "failed");
  CHECK(exit_code_for(PlanningError("x")) == kPlanningFailed);
  CHECK(exit_code_for(ParseError("x", 1, 1)) == kInputError);
  CHECK(exit_code_for(InvalidArgument("x")) == kInputError);
  CHECK(exit_code_for(NumericError("x")) == kNumericError);
  fs::remove_all(dir);
}

TEST_CASE("manifest records overrides and resets when the config changes") {
  const auto dir = scratch("manifest");
  auto ctx = context(small_chem(), dir);
  ctx.overrides.push_back({"seed", 0, 4});
  apply_seed(ctx.config, 4);
  REQUIRE(run_stage(Stage::Simulate, ctx) == kSuccess);
  auto m = manifest(dir);
  CHECK(m.at("seed") == 4);
  CHECK(m.at("overrides").at(0).at("key") == "seed");
  CHECK(m.at("overrides").at(0).at("flag") == 4);
  CHECK(m.at("config").at("system").at("seed") == 4);

  auto other = context(small_chem(), dir);
  REQUIRE(run_stage(Stage::Simulate, other) == kSuccess);
  m = manifest(dir);
  CHECK(m.at("seed") == 0);
  CHECK(m.at("overrides").empty());
  CHECK(m.at("config_hash") == config_hash(other.config));
  CHECK(config_hash(other.config) != config_hash(ctx.config));
  fs::remove_all(dir);
}

TEST_CASE("output directory resolution") {
  auto c = parse_config({{"output", "runs/x"}});
  setenv("FFC_OUTPUT_ROOT", "/tmp/root", 1);
  CHECK(resolve_output_dir("", c) == "/tmp/root/runs/x");
  CHECK(resolve_output_dir("/abs/y", c) == "/abs/y");
  unsetenv("FFC_OUTPUT_ROOT");
  CHECK(resolve_output_dir("", c) == "runs/x");
}

TEST_CASE("closed-form model reproduces the chem curves") {
  const auto dir = scratch("closed");
  json j = {{"system", {{"kind", "bistable_chem"}}},
            {"ensemble", {{"count", 2}, {"horizon", 1}}},
            {"sindy", {{"model", "closed_form"}}},
            {"analysis", {{"box", 200}, {"state_box", 20}, {"resolution", 16}, {"cycle_grid", 0}, {"curve_samples", 200}}}};
  const auto ctx = context(j, dir);
  REQUIRE(run_stage(Stage::Fit, ctx) == kSuccess);
  REQUIRE(run_stage(Stage::Analyze, ctx) == kSuccess);
  std::ifstream in(dir / "curves.csv");
  std::string line;
  std::getline(in, line);
  int hopf = 0, fold = 0;
  double worst = 0.0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<std::string> f;
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    REQUIRE(f.size() == 9);
    if (f[6] != "1") continue;
    const std::string& kind = f[0];
    // Closed forms are parameterised by the x coordinate of the fixed point.
    const double t = std::stod(f[2]), u1 = std::stod(f[4]), u2 = std::stod(f[5]);
    if (kind == "hopf") {
      ++hopf;
      worst = std::max({worst, std::abs(u1 - (-t * t + 24 * t + 152)), std::abs(u2 - (-t * t - 16 * t - 76))});
    } else if (kind == "saddle_node") {
      ++fold;
      worst = std::max({worst, std::abs(u1 - (-t * t * t / 4 + 7 * t * t - 32 * t + 24)),
                        std::abs(u2 - (-3 * t * t + 16 * t - 12))});
    }
  }
  CHECK(hopf >= 200);
  CHECK(fold >= 200);
  CHECK(worst < 1e-8);
  fs::remove_all(dir);
}
