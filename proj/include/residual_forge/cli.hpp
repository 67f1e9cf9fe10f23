#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "residual_forge/error.hpp"
#include "residual_forge/pipeline.hpp"

namespace residual_forge::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitValidation = 3,
  kExitAllRunsFailed = 4,
};

int exit_code_for(ErrorCode code);

using Args = std::vector<std::string>;

/// Each command takes its arguments without the program or subcommand name.
/// Result objects go to out, diagnostics to err.
int cmd_optimize(const Args& args, std::ostream& out, std::ostream& err);
int cmd_metrics(const Args& args, std::ostream& out, std::ostream& err);
int cmd_experiment(const Args& args, std::ostream& out, std::ostream& err);
int cmd_synth(const Args& args, std::ostream& out, std::ostream& err);

/// Dispatches on args[0] (optimize, metrics, experiment, synth).
int run(const Args& args, std::ostream& out, std::ostream& err);

struct ExperimentPair {
  std::string name;
  std::filesystem::path input;
  std::filesystem::path target;
};

struct ExperimentSpec {
  std::vector<ExperimentPair> pairs;
  std::vector<Method> methods;
  RunSettings settings;
};

/// Reads the key = value dialect documented in the README. Relative pair
/// paths resolve against the spec file's directory. Throws Error with
/// FileNotFound/IoError for an unreadable file and InvalidConfig for
/// malformed content; does not check that the pair files exist.
ExperimentSpec parse_experiment_spec(const std::filesystem::path& path);

/// Worker count for experiment jobs: the request (or hardware concurrency),
/// capped by RESIDUAL_FORGE_THREADS when that is a positive integer.
unsigned experiment_threads(std::optional<unsigned> requested, std::size_t jobs);

}  // namespace residual_forge::cli
