#pragma once

#include "ffc/config.hpp"

#include <string>
#include <vector>

namespace ffc {

enum class Stage { Simulate, Reduce, Fit, Analyze, Plan, Execute, Fig1 };

std::string to_string(Stage s);

/// Process exit codes.
enum ExitCode { kSuccess = 0, kVerificationFailed = 2, kPlanningFailed = 3, kInputError = 4, kNumericError = 5 };

/// A flag that replaced a config value; recorded in the manifest.
struct Override {
  std::string key;
  json config_value;
  json flag_value;
};

struct RunContext {
  PipelineConfig config;
  std::string dir;
  std::vector<Override> overrides;
};

/// Runs one stage: reads its inputs from the run directory, writes its artifacts there and
/// records the outcome in manifest.json. Errors are reported on stderr and mapped to an exit code.
int run_stage(Stage stage, const RunContext& ctx);

/// simulate, reduce, fit, analyze, plan, execute in order; stops at the first failure.
int run_pipeline(const RunContext& ctx);

/// Exit code for an exception escaping a stage.
int exit_code_for(const std::exception& e);

/// FNV-1a of the canonical config text, as 16 hex digits.
std::string config_hash(const PipelineConfig& c);

/// Run directory: the flag, else the config's output; relative paths go under $FFC_OUTPUT_ROOT.
std::string resolve_output_dir(const std::string& flag, const PipelineConfig& c);

}  // namespace ffc
