#include "fsprior/encoder/checkpoint.hpp"

#include <json.hpp>

#include "fsprior/common/container.hpp"
#include "fsprior/common/error.hpp"

namespace fsprior::encoder {

void save_encoder(const std::filesystem::path& path, const EncoderParams& params) {
  if (params.values.size() != params.arch.parameter_count()) {
    throw std::invalid_argument("save_encoder: parameter count mismatch");
  }
  save_container(path, params.arch.to_json(), params.values);
}

EncoderParams load_encoder(const std::filesystem::path& path) {
  Container c = load_container(path);
  EncoderParams p;
  try {
    p.arch = EncoderArchitecture::from_json(c.header_json);
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (c.values.size() != p.arch.parameter_count()) {
    throw IoError(path.string() + ": parameter blob does not match architecture");
  }
  p.values = std::move(c.values);
  return p;
}

void save_tensor(const std::filesystem::path& path, const FeatureMap& t) {
  nlohmann::ordered_json j;
  j["kind"] = "tensor";
  j["shape"] = {t.height, t.width, t.channels};
  save_container(path, j.dump(), t.values);
}

FeatureMap load_tensor(const std::filesystem::path& path) {
  Container c = load_container(path);
  FeatureMap t;
  try {
    const auto j = nlohmann::json::parse(c.header_json);
    if (j.at("kind").get<std::string>() != "tensor") throw IoError(path.string() + ": not a tensor file");
    const auto& shape = j.at("shape");
    t = FeatureMap(shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad tensor header: " + e.what());
  }
  if (c.values.size() != t.values.size()) throw IoError(path.string() + ": tensor blob does not match shape");
  t.values = std::move(c.values);
  return t;
}

}  // namespace fsprior::encoder
