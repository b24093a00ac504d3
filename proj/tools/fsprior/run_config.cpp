#include "run_config.hpp"

#include <set>
#include <type_traits>

#include <json.hpp>

#include "fsprior/common/atomic_file.hpp"
#include "fsprior/common/error.hpp"

namespace fsprior::cli {

using nlohmann::ordered_json;

namespace {

template <typename E>
struct EnumNames;

template <>
struct EnumNames<contrastive::PatchMethod> {
  static constexpr std::pair<contrastive::PatchMethod, const char*> items[] = {
      {contrastive::PatchMethod::Slic, "slic"}, {contrastive::PatchMethod::Felz, "felz"}};
};
template <>
struct EnumNames<patchgen::EdgeWeight> {
  static constexpr std::pair<patchgen::EdgeWeight, const char*> items[] = {
      {patchgen::EdgeWeight::EuclideanRgb, "rgb"}, {patchgen::EdgeWeight::Intensity, "intensity"}};
};
template <>
struct EnumNames<regionmap::Polarity> {
  static constexpr std::pair<regionmap::Polarity, const char*> items[] = {
      {regionmap::Polarity::AsIs, "as-is"}, {regionmap::Polarity::InvertedPrior, "inverted-prior"}};
};

// One field list per struct, shared by the writer and the reader.
template <typename V>
void visit(V& v, SynthConfig& s) {
  v("count", s.count);
  v("classes", s.classes);
  v("size", s.size);
}
template <typename V>
void visit(V& v, patchgen::SlicParams& p) {
  v("k_clusters", p.k_clusters);
  v("compactness", p.compactness);
  v("residual_threshold", p.residual_threshold);
  v("max_iterations", p.max_iterations);
  v("recenter_window", p.recenter_window);
}
template <typename V>
void visit(V& v, patchgen::FelzParams& p) {
  v("scale", p.scale);
  v("min_component_size", p.min_component_size);
  v("connectivity", p.connectivity);
  v("weight", p.weight);
}
template <typename V>
void visit(V& v, imagecore::AugSpec& a) {
  v("crop_scale_min", a.crop_scale_min);
  v("crop_scale_max", a.crop_scale_max);
  v("flip_prob", a.flip_prob);
  v("color_jitter", a.color_jitter);
  v("blur_sigma_min", a.blur_sigma_min);
  v("blur_sigma_max", a.blur_sigma_max);
}
template <typename V>
void visit(V& v, encoder::SgdConfig& s) {
  v("learning_rate", s.learning_rate);
  v("momentum", s.momentum);
  v("weight_decay", s.weight_decay);
}
template <typename V>
void visit(V& v, contrastive::LossWeights& w) {
  v("global", w.global);
  v("local", w.local);
}
template <typename V>
void visit(V& v, contrastive::ContrastiveConfig& c) {
  v("temperature", c.temperature);
  v("queue_capacity", c.queue_capacity);
  v("batch_size", c.batch_size);
  v("epochs", c.epochs);
  v("weights", c.weights);
  v("momentum", c.momentum);
  v("patch_method", c.patch_method);
  v("slic", c.slic);
  v("slic_target_patch_area", c.slic_target_patch_area);
  v("felz", c.felz);
  v("min_patch_area", c.min_patch_area);
  v("patch_size", c.patch_size);
  v("patches_per_image", c.patches_per_image);
  v("augment", c.augment);
  v("sgd", c.sgd);
  v("arch", c.arch);
}
template <typename V>
void visit(V& v, fewshot::EpisodeConfig& e) {
  v("shots", e.shots);
  v("num_folds", e.num_folds);
  v("fold", e.fold);
  v("train_episodes", e.train_episodes);
  v("eval_episodes", e.eval_episodes);
  v("train_feature_extractor", e.train_feature_extractor);
  v("polarity", e.polarity);
  v("arch", e.arch);
  v("decoder_hidden", e.decoder_hidden);
  v("sgd", e.sgd);
}
template <typename V>
void visit(V& v, RunConfig& r) {
  v("seed", r.seed);
  v("dataset", r.dataset);
  v("synth", r.synth);
  v("method", r.method);
  v("slic", r.slic);
  v("felz", r.felz);
  v("pretrain", r.pretrain);
  v("episode", r.episode);
  v("prior_checkpoint", r.prior_checkpoint);
  v("model_dir", r.model_dir);
  v("map_episodes", r.map_episodes);
}

template <typename T, typename V>
concept Visitable = requires(V& v, T& t) { visit(v, t); };

struct Writer {
  ordered_json j = ordered_json::object();

  template <typename T>
  void operator()(const char* key, T& value) {
    if constexpr (std::is_same_v<T, encoder::EncoderArchitecture>) {
      j[key] = ordered_json::parse(value.to_json());
    } else if constexpr (std::is_enum_v<T>) {
      for (const auto& [e, name] : EnumNames<T>::items) {
        if (e == value) j[key] = name;
      }
    } else if constexpr (Visitable<T, Writer>) {
      Writer inner;
      visit(inner, value);
      j[key] = std::move(inner.j);
    } else {
      j[key] = value;
    }
  }
};

struct Reader {
  const ordered_json& j;
  std::string path;
  std::set<std::string> seen;

  std::string where(const char* key) const { return path.empty() ? key : path + "." + key; }

  template <typename T>
  void operator()(const char* key, T& value) {
    seen.insert(key);
    if (!j.contains(key)) return;
    const auto& node = j.at(key);
    const std::string field = where(key);
    try {
      if constexpr (std::is_same_v<T, encoder::EncoderArchitecture>) {
        value = encoder::EncoderArchitecture::from_json(node.dump());
      } else if constexpr (std::is_enum_v<T>) {
        const auto name = node.get<std::string>();
        bool found = false;
        std::string allowed;
        for (const auto& [e, n] : EnumNames<T>::items) {
          if (name == n) {
            value = e;
            found = true;
          }
          allowed += std::string(allowed.empty() ? "" : ", ") + n;
        }
        if (!found) throw ConfigError(field + ": unknown value '" + name + "' (expected " + allowed + ")");
      } else if constexpr (Visitable<T, Reader>) {
        if (!node.is_object()) throw ConfigError(field + ": expected an object");
        Reader inner{node, field, {}};
        visit(inner, value);
        inner.finish();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!node.is_boolean()) throw ConfigError(field + ": expected a boolean");
        value = node.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!node.is_number_integer()) throw ConfigError(field + ": expected an integer");
        if (std::is_unsigned_v<T> && node.is_number_integer() && !node.is_number_unsigned()) {
          throw ConfigError(field + ": expected a non-negative integer");
        }
        value = node.get<T>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!node.is_number()) throw ConfigError(field + ": expected a number");
        value = node.get<T>();
      } else {
        if (!node.is_string()) throw ConfigError(field + ": expected a string");
        value = node.get<T>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(field + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(field + ": " + e.what());
    }
  }

  void finish() const {
    for (const auto& [k, _] : j.items()) {
      if (!seen.count(k)) throw ConfigError(where(k.c_str()) + ": unknown key");
    }
  }
};

void check(const std::string& group, auto&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(group + "." + e.what());
  }
}

}  // namespace

RunConfig::RunConfig() {
  // Desk-scale defaults sized for 32 x 32 synthetic images.
  pretrain.slic_target_patch_area = 128;
  pretrain.queue_capacity = 1024;
  pretrain.momentum = 0.99;
}

void RunConfig::validate() const {
  if (synth.count < 1) throw ConfigError("synth.count: must be >= 1");
  if (synth.classes < 2) throw ConfigError("synth.classes: must be >= 2");
  if (synth.size < 8) throw ConfigError("synth.size: must be >= 8");
  if (map_episodes < 0) throw ConfigError("map_episodes: must be >= 0");
  check("slic", [&] { slic.validate(); });
  check("felz", [&] { felz.validate(); });
  check("pretrain", [&] { pretrain.validate(); });
  check("episode", [&] { episode.validate(); });
}

std::string to_json(const RunConfig& config) {
  RunConfig copy = config;
  Writer w;
  visit(w, copy);
  return w.j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig config;
  Reader r{j, "", {}};
  visit(r, config);
  r.finish();
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return run_config_from_json(std::string(bytes.begin(), bytes.end()));
}

}  // namespace fsprior::cli
