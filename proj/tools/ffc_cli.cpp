#include "ffc/errors.hpp"
#include "ffc/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace ffc;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

// Loads the config and applies the flags; flags win and every replaced value is recorded.
RunContext make_context(const Flags& f) {
  RunContext ctx;
  json j = json::object();
  if (!f.config.empty()) {
    j = read_json_file(f.config);
    // Ingested CSV paths are relative to the config file.
    if (j.contains("system") && j["system"].is_object() && j["system"].contains("csv")) {
      const fs::path base = fs::absolute(f.config).parent_path();
      auto fix = [&](json& v) {
        if (v.is_string() && fs::path(v.get<std::string>()).is_relative()) v = (base / v.get<std::string>()).string();
      };
      auto& csv = j["system"]["csv"];
      if (csv.is_array())
        for (auto& v : csv) fix(v);
      else
        fix(csv);
    }
  }
  ctx.config = parse_config(j);
  if (f.seed) {
    ctx.overrides.push_back({"seed", ctx.config.seed, *f.seed});
    apply_seed(ctx.config, *f.seed);
  }
  if (f.workers) {
    ctx.overrides.push_back({"workers", ctx.config.workers, *f.workers});
    ctx.config.workers = *f.workers;
  }
  if (!f.out.empty()) {
    ctx.overrides.push_back({"output", ctx.config.output, f.out});
    ctx.config.output = f.out;
  }
  ctx.dir = resolve_output_dir("", ctx.config);
  for (const auto& o : ctx.overrides)
    if (o.config_value != o.flag_value)
      std::cerr << "note: --" << (o.key == "output" ? "out" : o.key) << " overrides config value " << o.config_value.dump()
                << " with " << o.flag_value.dump() << '\n';
  return ctx;
}

int run(const Flags& f, const std::optional<Stage>& stage) {
  RunContext ctx;
  try {
    ctx = make_context(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  const int code = stage ? run_stage(*stage, ctx) : run_pipeline(ctx);
  std::cout << (stage ? to_string(*stage) : std::string("pipeline")) << ": "
            << (code == kSuccess ? "ok" : "failed (exit " + std::to_string(code) + ")") << ", artifacts in " << ctx.dir
            << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attractor switching by constant control on reduced polynomial models"};
  app.footer(config_help() + "\nExit codes: 0 success, 2 verification failure, 3 planning failure, "
                             "4 input or parse error, 5 numeric stage failure.\n");
  app.require_subcommand(1);

  Flags flags;
  std::optional<Stage> chosen;
  bool pipeline = false;
  const std::pair<const char*, std::optional<Stage>> commands[] = {
      {"simulate", Stage::Simulate}, {"reduce", Stage::Reduce}, {"fit", Stage::Fit},
      {"analyze", Stage::Analyze},   {"plan", Stage::Plan},     {"execute", Stage::Execute},
      {"fig1", Stage::Fig1},         {"pipeline", std::nullopt}};
  const char* descriptions[] = {"sample the generator (or ingest CSV) into ensemble/",
                                "fit the reduced basis; writes basis.json and variance.csv",
                                "fit the sparse polynomial model; writes model.json",
                                "fixed points, stability map, bifurcation curves and reachability",
                                "plan the control schedule for the objective",
                                "run the schedule on the full system and verify every leg",
                                "cumulative variance experiment; writes fig1.csv",
                                "simulate, reduce, fit, analyze, plan and execute in order"};
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, descriptions[i]);
    sub->add_option("--config", flags.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "run directory (overrides output)");
    sub->add_option("--seed", flags.seed, "run seed (overrides seed)");
    sub->add_option("--workers", flags.workers, "worker threads (overrides workers)")->check(CLI::Range(1, 256));
    const auto stage = commands[i].second;
    sub->callback([&, stage] {
      chosen = stage;
      pipeline = !stage.has_value();
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }
  return run(flags, pipeline ? std::nullopt : chosen);
}
