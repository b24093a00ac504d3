#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include "fsprior/common/atomic_file.hpp"
#include "fsprior/common/error.hpp"
#include "fsprior/encoder/checkpoint.hpp"
#include "fsprior/fewshot/dataset.hpp"
#include "fsprior/imagecore/color.hpp"
#include "fsprior/imagecore/png_io.hpp"
#include "fsprior/imagecore/synth.hpp"
#include "fsprior/patchgen/segmentation.hpp"

namespace fsprior::cli {

namespace fs = std::filesystem;

namespace {

void echo_config(const RunConfig& config, const fs::path& out) {
  fs::create_directories(out);
  write_file_atomic(out / "run_config.json", to_json(config));
}

fewshot::SegDataset load_dataset(const RunConfig& config) {
  if (config.dataset.empty()) throw ConfigError("dataset: no dataset directory given");
  return fewshot::SegDataset::load(config.dataset);
}

encoder::EncoderParams load_prior(const RunConfig& config) {
  if (config.prior_checkpoint.empty()) throw ConfigError("prior_checkpoint: no prior extractor checkpoint given");
  return encoder::load_encoder(config.prior_checkpoint);
}

/// Trained model from model_dir, or the seed's untrained model when unset.
fewshot::FewShotModel load_model(const RunConfig& config) {
  if (config.model_dir.empty()) return fewshot::init_model(config.episode, config.seed);
  const fs::path dir = config.model_dir;
  return {encoder::load_encoder(dir / "feature.ckpt"), fewshot::load_decoder(dir / "decoder.ckpt")};
}

fewshot::FoldSplit fold_of(const RunConfig& config, const fewshot::SegDataset& data) {
  const auto folds = fewshot::make_folds(data.num_classes(), config.episode.num_folds);
  return folds.at(static_cast<std::size_t>(config.episode.fold));
}

std::string params_json(const RunConfig& config) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(to_json(config));
  nlohmann::ordered_json p;
  p["method"] = j["method"];
  p[config.method == contrastive::PatchMethod::Slic ? "slic" : "felz"] =
      j[config.method == contrastive::PatchMethod::Slic ? "slic" : "felz"];
  return p.dump();
}

}  // namespace

void cmd_synth(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto images = imagecore::synth_dataset(config.synth.count, config.synth.classes, config.synth.size, config.seed);
  const auto data = fewshot::SegDataset::from_synthetic(images, config.synth.classes);
  data.save(out);
  echo_config(config, out);
  log << "wrote " << data.size() << " images, " << data.num_classes() << " classes to " << out.string() << "\n";
}

void cmd_patches(const RunConfig& config, const PatchesArgs& args, const fs::path& out, std::ostream& log) {
  if (args.inputs.empty()) throw ConfigError("patches: no input images");
  // Read everything first so a bad input leaves no outputs behind.
  std::vector<imagecore::RgbImage> images;
  for (const auto& p : args.inputs) images.push_back(imagecore::read_png_rgb(p));

  fs::create_directories(out);
  const std::string params = params_json(config);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const patchgen::PatchSegmentation seg = config.method == contrastive::PatchMethod::Slic
                                                ? patchgen::slic_segment(imagecore::rgb_to_lab(images[i]), config.slic)
                                                : patchgen::felz_segment(images[i], config.felz);
    const std::string stem = args.inputs[i].stem().string();
    patchgen::save_segmentation(out / (stem + ".labels.png"), out / (stem + ".json"), seg, params);
    log << args.inputs[i].string() << ": " << seg.patch_count << " patches\n";
  }
  echo_config(config, out);
}

void cmd_pretrain(const RunConfig& config, const PretrainArgs& args, const fs::path& out, std::ostream& log) {
  const auto data = load_dataset(config);
  contrastive::Pretrainer trainer(data.images(), config.pretrain, config.seed);
  fs::create_directories(out);
  const fs::path state = out / "pretrain_state.bin";
  if (args.resume && fs::exists(state)) {
    trainer.load_state(state);
    log << "resumed at epoch " << trainer.epochs_done() << "\n";
  }
  echo_config(config, out);
  while (trainer.epochs_done() < config.pretrain.epochs) {
    if (args.stop_after >= 0 && trainer.epochs_done() >= args.stop_after) {
      log << "stopped after epoch " << trainer.epochs_done() << "\n";
      return;
    }
    trainer.run_epoch();
    trainer.save_state(state);
    const auto& s = trainer.stats().epochs.back();
    log << "epoch " << s.epoch << " l_total " << s.total_loss << "\n";
  }
  encoder::save_encoder(out / "prior.ckpt", trainer.query_encoder());
  write_file_atomic(out / "pretrain_stats.csv", trainer.stats().to_csv());
}

void cmd_train(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto prior = load_prior(config);
  const auto data = load_dataset(config);
  const auto split = fold_of(config, data);
  std::optional<fewshot::FewShotModel> init;
  if (!config.model_dir.empty()) init = load_model(config);
  const auto result = fewshot::episode_train(data, split, prior, config.episode, config.seed, std::move(init));
  fs::create_directories(out);
  encoder::save_encoder(out / "feature.ckpt", result.model.feature);
  fewshot::save_decoder(out / "decoder.ckpt", result.model.decoder);
  write_file_atomic(out / "train_stats.csv", result.stats.to_csv());
  echo_config(config, out);
  log << "trained " << result.stats.records.size() << " episodes (" << result.stats.skipped << " skipped)\n";
}

void cmd_maps(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto prior = load_prior(config);
  const auto model = load_model(config);
  const auto data = load_dataset(config);
  const auto split = fold_of(config, data);
  fs::create_directories(out);
  fewshot::MetricAccumulator acc;
  std::string rows = "episode,class,query,tp,fp,fn,tn,iou\n";
  for (int i = 0; i < config.map_episodes; ++i) {
    const auto ep = fewshot::sample_episode(data, split, fewshot::Phase::Test, config.episode.shots,
                                            fewshot::episode_seed(config.seed, fewshot::Phase::Test, i));
    const auto res = fewshot::run_episode(ep, prior, model, config.episode.polarity);
    const std::string stem = "episode_" + std::to_string(i);
    imagecore::write_png(out / (stem + "_query.png"), ep.query_image);
    imagecore::write_png(out / (stem + "_gt.png"), ep.query_mask);
    regionmap::write_map_png(out / (stem + "_prior.png"), res.prior);
    regionmap::write_map_png(out / (stem + "_guided.png"), res.guided);
    imagecore::write_png(out / (stem + "_pred.png"), res.prediction);
    regionmap::save_map(out / (stem + "_prior.tensor"), res.prior);
    regionmap::save_map(out / (stem + "_guided.tensor"), res.guided);
    const auto c = fewshot::confusion(res.prediction, ep.query_mask);
    acc.add(ep.class_id, c);
    char iou[32];
    std::snprintf(iou, sizeof(iou), "%.9f", fewshot::iou(c));
    rows += std::to_string(i) + "," + std::to_string(ep.class_id) + "," + std::to_string(ep.query_id) + "," +
            std::to_string(c.tp) + "," + std::to_string(c.fp) + "," + std::to_string(c.fn) + "," +
            std::to_string(c.tn) + "," + iou + "\n";
  }
  write_file_atomic(out / "episodes.csv", rows);
  echo_config(config, out);
  log << "wrote maps for " << config.map_episodes << " episodes, mIoU " << acc.miou() << "\n";
}

void cmd_eval(const RunConfig& config, const EvalArgs& args, const fs::path& out, std::ostream& log) {
  const auto prior = load_prior(config);
  const auto model = load_model(config);
  const auto data = load_dataset(config);
  const auto split = fold_of(config, data);
  const auto report = fewshot::episode_eval(data, split, prior, model, config.episode, config.seed);
  fs::create_directories(out);
  write_file_atomic(out / "metrics.csv", report.metrics_csv());
  write_file_atomic(out / "episodes.csv", report.episodes_csv());
  write_file_atomic(out / "summary.json", report.summary_json());
  if (args.alpha_sweep) write_file_atomic(out / "recall_sweep.csv", report.sweep_csv());
  echo_config(config, out);
  log << "fold " << report.fold << " mIoU " << report.miou() << " FBIoU " << report.fbiou() << "\n";
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fsprior: patch-contrastive prior pretraining and few-shot segmentation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string method;
  PatchesArgs patches_args;
  std::vector<std::string> inputs;
  PretrainArgs pretrain_args;
  EvalArgs eval_args;

  auto common = [&](CLI::App* sub, bool with_method) {
    sub->add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory")->required();
    if (with_method) sub->add_option("--method", method, "slic or felz")->check(CLI::IsMember({"slic", "felz"}));
  };

  auto* synth = app.add_subcommand("synth", "generate the synthetic shapes dataset");
  common(synth, false);
  auto* patches = app.add_subcommand("patches", "segment images into patches");
  common(patches, true);
  patches->add_option("inputs", inputs, "PNG images")->required();
  auto* pretrain = app.add_subcommand("pretrain", "contrastive pretraining of the prior extractor");
  common(pretrain, true);
  pretrain->add_flag("--resume", pretrain_args.resume, "continue from <out>/pretrain_state.bin");
  pretrain->add_option("--stop-after", pretrain_args.stop_after, "stop once this many epochs are done");
  auto* train = app.add_subcommand("train", "episode training of the feature extractor and decoder");
  common(train, false);
  auto* maps = app.add_subcommand("maps", "write region maps and predictions for test episodes");
  common(maps, false);
  auto* eval = app.add_subcommand("eval", "evaluate on test-fold episodes");
  common(eval, false);
  eval->add_flag("--alpha-sweep", eval_args.alpha_sweep, "also write recall_sweep.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    auto* sub = app.get_subcommands().front();
    if (sub->count("--seed")) config.seed = seed;
    if (!method.empty()) {
      const auto m = method == "slic" ? contrastive::PatchMethod::Slic : contrastive::PatchMethod::Felz;
      if (sub == pretrain) config.pretrain.patch_method = m;
      else config.method = m;
    }
    config.validate();
    const fs::path out_path = out_dir;

    if (sub == synth) cmd_synth(config, out_path, out);
    else if (sub == patches) {
      for (const auto& s : inputs) patches_args.inputs.emplace_back(s);
      cmd_patches(config, patches_args, out_path, out);
    } else if (sub == pretrain) cmd_pretrain(config, pretrain_args, out_path, out);
    else if (sub == train) cmd_train(config, out_path, out);
    else if (sub == maps) cmd_maps(config, out_path, out);
    else cmd_eval(config, eval_args, out_path, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace fsprior::cli
