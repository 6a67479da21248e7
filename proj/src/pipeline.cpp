#include "ffc/pipeline.hpp"

#include "ffc/bifurcation.hpp"
#include "ffc/errors.hpp"
#include "ffc/fixed_points.hpp"
#include "ffc/json_io.hpp"
#include "ffc/limit_cycles.hpp"
#include "ffc/planner.hpp"
#include "ffc/probe.hpp"
#include "ffc/reduction.hpp"
#include "ffc/sindy.hpp"
#include "ffc/stability_map.hpp"
#include "ffc/systems.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

namespace fs = std::filesystem;

namespace ffc {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Simulate: return "simulate";
    case Stage::Reduce: return "reduce";
    case Stage::Fit: return "fit";
    case Stage::Analyze: return "analyze";
    case Stage::Plan: return "plan";
    case Stage::Execute: return "execute";
    case Stage::Fig1: return "fig1";
  }
  return "?";
}

std::string config_hash(const PipelineConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string resolve_output_dir(const std::string& flag, const PipelineConfig& c) {
  fs::path p = flag.empty() ? fs::path(c.output) : fs::path(flag);
  const char* root = std::getenv("FFC_OUTPUT_ROOT");
  if (p.is_relative() && root && *root) p = fs::path(root) / p;
  return p.string();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const PlanningError*>(&e)) return kPlanningFailed;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const json::exception*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e))
    return kInputError;
  return kNumericError;
}

namespace {

std::string path(const RunContext& ctx, const std::string& name) { return (fs::path(ctx.dir) / name).string(); }

void write_text(const std::string& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw InvalidArgument("cannot write " + file);
  out << text;
}

// ---- manifest

json load_manifest(const RunContext& ctx) {
  const auto file = path(ctx, "manifest.json");
  const auto hash = config_hash(ctx.config);
  if (fs::exists(file)) {
    try {
      auto m = read_json_file(file);
      if (m.value("config_hash", "") == hash) return m;
    } catch (const ParseError&) {
    }
  }
  json overrides = json::array();
  for (const auto& o : ctx.overrides)
    overrides.push_back({{"key", o.key}, {"config", o.config_value}, {"flag", o.flag_value}});
  return {{"config", config_to_json(ctx.config)},
          {"config_hash", hash},
          {"seed", ctx.config.seed},
          {"overrides", overrides},
          {"stages", json::object()}};
}

void record_stage(const RunContext& ctx, Stage s, const json& entry) {
  auto m = load_manifest(ctx);
  m["stages"][to_string(s)] = entry;
  write_json_file(path(ctx, "manifest.json"), m);
}

// ---- shared loaders

GeneratedSystem generator(const RunContext& ctx) {
  if (!ctx.config.system) throw InvalidArgument("system: this stage needs a generated system, not csv input");
  return generate_system(*ctx.config.system);
}

Ensemble load_ensemble(const RunContext& ctx) {
  const auto meta = read_json_file(path(ctx, "ensemble/ensemble.json"));
  Ensemble ens;
  ens.dt = meta.at("dt").get<double>();
  ens.horizon = meta.at("horizon").get<double>();
  ens.seed = meta.at("seed").get<std::uint64_t>();
  for (const auto& f : meta.at("files")) ens.trajectories.push_back(read_trajectory_csv(path(ctx, "ensemble/" + f.get<std::string>())));
  if (ens.trajectories.empty()) throw NumericError("ensemble is empty");
  return ens;
}

ReducedBasis load_basis(const RunContext& ctx) { return basis_from_json(read_json_file(path(ctx, "basis.json"))); }

SparseModel load_model(const RunContext& ctx) { return model_from_json(read_json_file(path(ctx, "model.json"))); }

StabilityMap build_map(const PolySystem& sys, const PipelineConfig& c, bool with_cycles) {
  MapOptions o;
  o.resolution = c.analysis.resolution;
  o.cycle_grid = with_cycles ? c.analysis.cycle_grid : 0;
  o.workers = c.workers;
  o.fallback_box = StateBox{c.analysis.state_lower, c.analysis.state_upper};
  return stability_map(sys, Eigen::Vector2d(c.analysis.lower), Eigen::Vector2d(c.analysis.upper), o);
}

AttractorProbe build_probe(const PolySystem& sys, const PipelineConfig& c) {
  ProbeOptions o = c.analysis.probe;
  o.workers = c.workers;
  return probe_attractors(sys, c.analysis.lower, c.analysis.upper, o);
}

json fixed_points_json(const std::vector<FixedPointRecord>& fps) {
  json a = json::array();
  for (const auto& fp : fps)
    a.push_back({{"location", to_json(fp.location)},
                 {"trace", fp.jac.trace},
                 {"det", fp.jac.det},
                 {"class", std::string(1, to_char(fp.region))},
                 {"signature", fp.signature},
                 {"stable", fp.stable}});
  return a;
}

json region_json(const TargetRegion& r) {
  json cloud = json::array();
  for (const auto& p : r.cloud) cloud.push_back(to_json(p));
  return {{"point", to_json(r.point)}, {"radius", r.radius}, {"cloud", cloud}};
}

Eigen::VectorXd anchor(const TargetRegion& r) { return r.cloud.empty() ? r.point : r.cloud.front(); }

TargetRegion region_from_json(const json& j) {
  TargetRegion r;
  r.point = vector_from_json(j.at("point"), "targets.point");
  r.radius = j.at("radius").get<double>();
  for (const auto& p : j.at("cloud")) r.cloud.push_back(vector_from_json(p, "targets.cloud"));
  return r;
}

// Model attractor for each requested target.
std::vector<int> resolve_targets(const RunContext& ctx, const std::vector<TargetRegion>& model_targets,
                                 const ReducedBasis& basis, json& evidence) {
  const auto& obj = ctx.config.objective;
  if (obj.targets.empty()) throw InvalidArgument("objective.targets: empty");
  evidence = json::array();
  if (obj.reference == "model") {
    for (int t : obj.targets)
      if (t >= static_cast<int>(model_targets.size()))
        throw PlanningError("objective.targets: model attractor " + std::to_string(t) + " does not exist (the model has " +
                            std::to_string(model_targets.size()) + " attractors at u = 0)");
    return obj.targets;
  }
  const auto g = generator(ctx);
  const auto& truth = g.truth.attractors;
  std::vector<int> out;
  for (int t : obj.targets) {
    if (t >= static_cast<int>(truth.size()))
      throw InvalidArgument("objective.targets: the generator has " + std::to_string(truth.size()) + " attractors, not " +
                            std::to_string(t + 1));
    const Eigen::VectorXd z = project(basis, truth[static_cast<std::size_t>(t)]);
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < model_targets.size(); ++k) {
      const double d = model_targets[k].distance(z);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(k);
      }
    }
    if (best < 0) throw PlanningError("the model has no attractor at u = 0");
    evidence.push_back({{"truth", t}, {"model", best}, {"distance", bd}});
    out.push_back(best);
  }
  return out;
}

// ---- stages

json stage_simulate(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto dir = fs::path(ctx.dir) / "ensemble";
  fs::remove_all(dir);
  fs::create_directories(dir);
  json meta;
  std::vector<Trajectory> trajs;
  if (c.system) {
    const auto g = generator(ctx);
    Sampler s;
    s.lower = c.ensemble.lower;
    s.upper = c.ensemble.upper;
    s.count = c.ensemble.count;
    s.seed = c.seed;
    s.noise_sigma = c.ensemble.noise;
    EnsembleOptions eo;
    eo.stride = c.ensemble.stride;
    eo.workers = c.workers;
    auto ens = ensemble(g, s, c.ensemble.dt, c.ensemble.horizon, eo);
    meta = {{"source", "generator"}, {"seed", ens.seed}, {"seeds", ens.seeds}, {"excluded", ens.excluded},
            {"dt", ens.dt},          {"horizon", ens.horizon}};
    trajs = std::move(ens.trajectories);
  } else {
    for (const auto& f : c.csv) trajs.push_back(read_trajectory_csv(f));
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      if (trajs[i].dim() != trajs[0].dim()) throw ParseError(c.csv[i] + ": state dimension differs from " + c.csv[0]);
      if (trajs[i].samples() < 3) throw ParseError(c.csv[i] + ": needs at least three samples");
    }
    double horizon = 0.0;
    for (const auto& t : trajs) horizon = std::max(horizon, t.times[t.samples() - 1] - t.times[0]);
    meta = {{"source", "csv"}, {"inputs", c.csv}, {"seed", c.seed}, {"dt", trajs[0].dt()}, {"horizon", horizon}};
  }
  json files = json::array();
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "traj_%04zu.csv", i);
    write_trajectory_csv((dir / name).string(), trajs[i]);
    files.push_back(name);
  }
  meta["files"] = files;
  meta["dim"] = trajs.front().dim();
  write_json_file((dir / "ensemble.json").string(), meta);
  return {{"outputs", {"ensemble/ensemble.json"}}, {"trajectories", trajs.size()}};
}

json stage_reduce(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto ens = load_ensemble(ctx);
  if (ens.trajectories.front().dim() < c.rank)
    throw InvalidArgument("reduction.rank: " + std::to_string(c.rank) + " exceeds the state dimension " +
                          std::to_string(ens.trajectories.front().dim()));
  BasisOptions bo;
  bo.skip_time = c.reduction_skip_time;
  const auto basis = fit_basis(ens, c.rank, bo);
  const auto profile = variance_profile_from_squares(basis.singular_values.array().square().matrix());
  write_json_file(path(ctx, "basis.json"), basis_to_json(basis));
  std::string csv = "mode,cumulative_variance\n";
  for (Eigen::Index k = 0; k < profile.size(); ++k) {
    char line[64];
    std::snprintf(line, sizeof line, "%lld,%.17g\n", static_cast<long long>(k + 1), profile[k]);
    csv += line;
  }
  write_text(path(ctx, "variance.csv"), csv);
  return {{"outputs", {"basis.json", "variance.csv"}},
          {"cumulative_variance_at_rank", profile[c.rank - 1]},
          {"rank_deficient", basis.rank_deficient}};
}

json stage_fit(const RunContext& ctx) {
  if (ctx.config.closed_form_model) {
    const auto g = generator(ctx);
    if (!g.poly) throw Unsupported("sindy.model: closed_form needs a system with an explicit polynomial form");
    const auto model = system_to_model(*g.poly, ctx.config.sindy.degree);
    write_json_file(path(ctx, "model.json"), model_to_json(model));
    return {{"outputs", {"model.json"}}, {"support", model.support_size()}, {"source", "closed_form"}};
  }
  const auto ens = load_ensemble(ctx);
  const auto basis = load_basis(ctx);
  const auto model = fit_sindy(project(basis, ens), ctx.config.sindy);
  write_json_file(path(ctx, "model.json"), model_to_json(model));
  if (model.support_size() == 0)
    throw NumericError("every coefficient fell below sindy.lambda = " + std::to_string(ctx.config.sindy.lambda) +
                       "; lower the threshold (see the lambda sweep) or rescale the data");
  return {{"outputs", {"model.json"}}, {"support", model.support_size()}, {"residual", to_json(model.residual)}};
}

json stage_analyze(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto sys = model_to_system(load_model(ctx));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
  const auto rest = find_fixed_points(sys, zero, StateBox{c.analysis.state_lower, c.analysis.state_upper});
  json out = {{"fixed_points", fixed_points_json(rest)}};
  if (sys.dim() == 2) {
    const StateBox box{c.analysis.state_lower, c.analysis.state_upper};
    const auto rest_cycles = detect_limit_cycles(sys, Eigen::Vector2d::Zero(), box);
    json cyc = json::array();
    for (const auto& lc : rest_cycles.cycles) {
      json enclosed = json::array();
      for (const auto& p : lc.enclosed) enclosed.push_back(to_json(Eigen::VectorXd(p)));
      cyc.push_back({{"period", lc.period}, {"enclosed", enclosed}, {"trapping_certificate", lc.certificate.has_value()}});
    }
    out["cycles_at_rest"] = {{"cycles", cyc}, {"undetermined", rest_cycles.undetermined},
                             {"infinity", to_string(global_stability(sys, Eigen::Vector2d::Zero()))}};
    const auto map = build_map(sys, c, true);
    {
      std::ofstream r(path(ctx, "regions.csv"));
      write_regions_csv(r, map);
      std::ofstream cy(path(ctx, "cycles.csv"));
      write_cycles_csv(cy, map);
    }
    std::vector<BifurcationCurve> curves;
    for (auto k : {CurveKind::Hopf, CurveKind::SaddleNode, CurveKind::HopfAtInfinity, CurveKind::SaddleNodeAtInfinity})
      curves.push_back(bifurcation_curve(sys, k, c.analysis.curve_t0, c.analysis.curve_t1, c.analysis.curve_samples));
    {
      std::ofstream cv(path(ctx, "curves.csv"));
      write_curves_csv(cv, curves);
    }
    json counts = json::object();
    for (const auto& cu : curves) counts[to_string(cu.kind)] = cu.samples.size();
    const auto agree = curve_agreement(map, curves);
    std::size_t ambiguous = 0;
    for (const auto& cell : map.cells) ambiguous += cell.ambiguous;
    out["map"] = {{"resolution", map.nx},
                  {"branches", map.branch_count},
                  {"ambiguous_cells", ambiguous},
                  {"census", census_to_json(region_census(map))},
                  {"curve_samples", counts},
                  {"curve_agreement",
                   {{"edges", agree.edges}, {"folds", agree.folds}, {"near_curve", agree.near_curve},
                    {"unexplained", agree.unexplained.size()}}}};
    out["controllability"] = controllability_to_json(controllability_report(map), map);
    write_json_file(path(ctx, "analysis.json"), out);
    return {{"outputs", {"analysis.json", "regions.csv", "cycles.csv", "curves.csv"}},
            {"attractors", map.attractors.size()}};
  }
  if (sys.dim() == 3) {
    const auto probe = build_probe(sys, c);
    out["probe"] = probe_to_json(probe);
    write_json_file(path(ctx, "analysis.json"), out);
    return {{"outputs", {"analysis.json"}}, {"attractors", probe.attractors.size()}};
  }
  throw Unsupported("analysis handles rank 2 and 3 models only");
}

json stage_plan(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto sys = model_to_system(load_model(ctx));
  const auto basis = load_basis(ctx);
  std::vector<TargetRegion> regions;
  ObjectivePath obj;
  obj.epsilon = c.objective.epsilon;
  obj.hold = c.objective.hold;
  json mapping;
  ControlSchedule sched;
  auto fail = [&](const std::exception& e, const json& extra) {
    json report = {{"status", "failed"}, {"error", e.what()}};
    report.update(extra);
    write_json_file(path(ctx, "plan.json"), report);
  };
  if (sys.dim() == 2) {
    const auto map = build_map(sys, c, false);
    regions = map_targets(map, obj.epsilon);
    obj.targets = resolve_targets(ctx, regions, basis, mapping);
    try {
      sched = plan_path(map, sys, obj, c.planner);
    } catch (const PlanningError& e) {
      const auto rep = controllability_report(map);
      json pairs = json::array();
      for (std::size_t l = 1; l < obj.targets.size(); ++l)
        if (const auto* p = rep.find(obj.targets[l - 1], obj.targets[l]))
          pairs.push_back({{"from", p->from}, {"to", p->to}, {"necessary", p->necessary},
                           {"necessary_cells", p->necessary_count}, {"sufficient_cells", p->sufficient_count}});
      fail(e, {{"legs", pairs}});
      throw;
    }
  } else {
    const auto probe = build_probe(sys, c);
    regions = probe_targets(probe, obj.epsilon);
    obj.targets = resolve_targets(ctx, regions, basis, mapping);
    try {
      sched = plan_path_probe(probe, sys, obj, c.planner);
    } catch (const PlanningError& e) {
      fail(e, json::object());
      throw;
    }
  }
  sched = lift_schedule(basis, sched);
  const auto self = replay(sys, sched, anchor(regions[static_cast<std::size_t>(obj.targets[0])]), regions, obj.hold,
                           c.planner.dt);
  write_json_file(path(ctx, "schedule.json"), schedule_to_json(sched));
  json regs = json::array();
  for (const auto& r : regions) regs.push_back(region_json(r));
  write_json_file(path(ctx, "targets.json"), {{"reference", c.objective.reference},
                                               {"requested", c.objective.targets},
                                               {"objective", obj.targets},
                                               {"mapping", mapping},
                                               {"epsilon", obj.epsilon},
                                               {"hold", obj.hold},
                                               {"regions", regs}});
  write_json_file(path(ctx, "plan.json"),
                  {{"status", "ok"}, {"model_replay", {{"all_succeeded", self.all_succeeded()}, {"legs", legs_to_json(self.legs)}}}});
  if (!self.all_succeeded()) throw PlanningError("the schedule does not reach every target on the model itself");
  return {{"outputs", {"schedule.json", "targets.json", "plan.json"}}, {"segments", sched.segments.size()}};
}

// Returns true when every leg succeeded on the full system.
bool stage_execute(const RunContext& ctx, json& summary) {
  const auto& c = ctx.config;
  const auto g = generator(ctx);
  const auto basis = load_basis(ctx);
  const auto sys = model_to_system(load_model(ctx));
  const auto sched = schedule_from_json(read_json_file(path(ctx, "schedule.json")));
  const auto tj = read_json_file(path(ctx, "targets.json"));
  std::vector<TargetRegion> regions;
  for (const auto& r : tj.at("regions")) regions.push_back(region_from_json(r));
  const auto objective = tj.at("objective").get<std::vector<int>>();
  if (objective.empty() || objective[0] >= static_cast<int>(regions.size())) throw ParseError("targets.json: bad objective");
  const auto& first = regions[static_cast<std::size_t>(objective[0])];
  const Eigen::VectorXd z0 = anchor(first);
  // Start from the generator attractor whose projection is nearest the first target.
  Eigen::VectorXd x0 = basis.modes * z0;
  std::string start = "lifted model state";
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : g.truth.attractors) {
    const double d = first.distance(project(basis, a));
    if (d < best) {
      best = d;
      x0 = a;
      start = "generator attractor";
    }
  }
  const double hold = tj.at("hold").get<double>();
  const auto rep = execute_and_verify(*g.field, basis, sys, sched, x0, regions, hold, c.execute_dt);
  write_trajectory_csv(path(ctx, "predicted.csv"), rep.predicted);
  write_trajectory_csv(path(ctx, "actual.csv"), rep.actual);
  auto v = verification_to_json(rep);
  v["start"] = start;
  v["objective"] = objective;
  write_json_file(path(ctx, "verify.json"), v);
  summary = {{"outputs", {"verify.json", "predicted.csv", "actual.csv"}}, {"all_succeeded", rep.all_succeeded()}};
  return rep.all_succeeded();
}

json stage_fig1(const RunContext& ctx) {
  const auto& f = ctx.config.fig1;
  const auto rows = cumulative_variance_experiment(f.sizes, f.densities, f.trials, ctx.config.seed, f.options);
  std::string csv = "n,density,trials_used,trials_excluded,mode,cumulative_variance\n";
  for (const auto& r : rows)
    for (Eigen::Index k = 0; k < r.mean_profile.size(); ++k) {
      char line[160];
      std::snprintf(line, sizeof line, "%d,%.17g,%d,%d,%lld,%.17g\n", r.n, r.density, r.trials_used, r.trials_excluded,
                    static_cast<long long>(k + 1), r.mean_profile[k]);
      csv += line;
    }
  write_text(path(ctx, "fig1.csv"), csv);
  return {{"outputs", {"fig1.csv"}}, {"rows", rows.size()}};
}

}  // namespace

int run_stage(Stage stage, const RunContext& ctx) {
  try {
    fs::create_directories(ctx.dir);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: cannot create output directory " << ctx.dir << ": " << e.what() << '\n';
    return kInputError;
  }
  json entry;
  int code = kSuccess;
  try {
    switch (stage) {
      case Stage::Simulate: entry = stage_simulate(ctx); break;
      case Stage::Reduce: entry = stage_reduce(ctx); break;
      case Stage::Fit: entry = stage_fit(ctx); break;
      case Stage::Analyze: entry = stage_analyze(ctx); break;
      case Stage::Plan: entry = stage_plan(ctx); break;
      case Stage::Execute:
        if (!stage_execute(ctx, entry)) code = kVerificationFailed;
        break;
      case Stage::Fig1: entry = stage_fig1(ctx); break;
    }
    entry["status"] = code == kSuccess ? "ok" : "verification_failed";
  } catch (const std::exception& e) {
    code = exit_code_for(e);
    entry = {{"status", "failed"}, {"error", e.what()}, {"exit_code", code}};
    std::cerr << "stage " << to_string(stage) << " failed: " << e.what() << '\n';
  }
  try {
    record_stage(ctx, stage, entry);
  } catch (const std::exception& e) {
    std::cerr << "cannot update manifest: " << e.what() << '\n';
    if (code == kSuccess) code = kInputError;
  }
  return code;
}

int run_pipeline(const RunContext& ctx) {
  const bool generated = ctx.config.system.has_value();
  for (auto s : {Stage::Simulate, Stage::Reduce, Stage::Fit, Stage::Analyze, Stage::Plan, Stage::Execute}) {
    if (s == Stage::Plan && ctx.config.objective.targets.empty()) {
      record_stage(ctx, s, {{"status", "skipped"}, {"reason", "objective.targets is empty"}});
      return kSuccess;
    }
    if (s == Stage::Execute && !generated) {
      record_stage(ctx, s, {{"status", "skipped"}, {"reason", "ingested data has no full system to execute on"}});
      return kSuccess;
    }
    const int code = run_stage(s, ctx);
    if (code != kSuccess) return code;
  }
  return kSuccess;
}

}  // namespace ffc
