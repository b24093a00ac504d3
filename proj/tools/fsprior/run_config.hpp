#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "fsprior/contrastive/pretrain.hpp"
#include "fsprior/fewshot/trainer.hpp"
#include "fsprior/patchgen/felz.hpp"
#include "fsprior/patchgen/slic.hpp"

namespace fsprior::cli {

/// Bad or unreadable run configuration; the message starts with the field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthConfig {
  int count = 1000;
  int classes = 8;
  int size = 32;
};

/// Every parameter a command can read. Commands ignore the groups they do
/// not use; the resolved config is echoed next to each command's outputs.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string dataset;           ///< directory with images/, masks/, classes.txt
  SynthConfig synth;
  contrastive::PatchMethod method = contrastive::PatchMethod::Slic;  ///< patches command
  patchgen::SlicParams slic;
  patchgen::FelzParams felz;
  contrastive::ContrastiveConfig pretrain;
  fewshot::EpisodeConfig episode;
  std::string prior_checkpoint;  ///< F_p, written by pretrain
  std::string model_dir;         ///< feature.ckpt + decoder.ckpt, written by train
  int map_episodes = 4;

  RunConfig();
  /// Throws ConfigError naming the field.
  void validate() const;
};

std::string to_json(const RunConfig& config);

/// Missing keys keep their defaults; unknown keys and wrong types are errors.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace fsprior::cli
