#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include "run_config.hpp"

namespace fsprior::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;  ///< usage, config, unreadable input, checkpoint mismatch
inline constexpr int kExitData = 3;   ///< well-formed input that cannot be used

struct PatchesArgs {
  std::vector<std::filesystem::path> inputs;
};

struct PretrainArgs {
  bool resume = false;
  int stop_after = -1;  ///< stop once this many epochs are done (simulates an interrupt)
};

struct EvalArgs {
  bool alpha_sweep = false;
};

void cmd_synth(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
void cmd_patches(const RunConfig& config, const PatchesArgs& args, const std::filesystem::path& out, std::ostream& log);
void cmd_pretrain(const RunConfig& config, const PretrainArgs& args, const std::filesystem::path& out, std::ostream& log);
void cmd_train(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
void cmd_maps(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
void cmd_eval(const RunConfig& config, const EvalArgs& args, const std::filesystem::path& out, std::ostream& log);

/// Parses argv, runs one subcommand and maps errors to exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fsprior::cli
