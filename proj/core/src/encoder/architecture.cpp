#include "fsprior/encoder/architecture.hpp"

#include <stdexcept>

#include <json.hpp>

namespace fsprior::encoder {

using nlohmann::ordered_json;

namespace {

ordered_json conv_to_json(const ConvSpec& c) {
  return ordered_json{{"type", "conv"},        {"kernel", c.kernel}, {"in", c.in_channels},
                      {"out", c.out_channels}, {"stride", c.stride}, {"relu", c.relu}};
}

ConvSpec conv_from_json(const ordered_json& j) {
  if (j.at("type").get<std::string>() != "conv") throw std::invalid_argument("unknown layer type");
  ConvSpec c;
  c.kernel = j.at("kernel").get<int>();
  c.in_channels = j.at("in").get<int>();
  c.out_channels = j.at("out").get<int>();
  c.stride = j.at("stride").get<int>();
  c.relu = j.at("relu").get<bool>();
  return c;
}

void validate_convs(const std::vector<ConvSpec>& convs, int input_channels) {
  int channels = input_channels;
  for (const auto& c : convs) {
    if (c.kernel < 1 || c.kernel % 2 == 0) throw std::invalid_argument("conv kernel must be odd and positive");
    if (c.stride < 1) throw std::invalid_argument("conv stride must be positive");
    if (c.in_channels != channels) throw std::invalid_argument("conv input channels do not chain");
    if (c.out_channels < 1) throw std::invalid_argument("conv output channels must be positive");
    channels = c.out_channels;
  }
}

template <typename F>
auto parse_or_throw(const std::string& text, F&& f) {
  try {
    return f(ordered_json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed architecture descriptor: ") + e.what());
  }
}

}  // namespace

EncoderArchitecture EncoderArchitecture::standard() { return with_widths(16, 32, 64, 32); }

EncoderArchitecture EncoderArchitecture::with_widths(int c1, int c2, int c3, int embed_dim, int min_input) {
  EncoderArchitecture a;
  a.min_input = min_input;
  a.convs = {ConvSpec{3, 3, c1, 2, true}, ConvSpec{3, c1, c2, 2, true}, ConvSpec{3, c2, c3, 1, true}};
  a.head = LinearSpec{c3, embed_dim};
  a.validate();
  return a;
}

std::size_t EncoderArchitecture::trunk_parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : convs) n += c.parameter_count();
  return n;
}

int EncoderArchitecture::output_extent(int input_extent) const {
  int e = input_extent;
  for (const auto& c : convs) e = c.output_extent(e);
  return e;
}

void EncoderArchitecture::validate() const {
  if (input_channels < 1) throw std::invalid_argument("encoder input_channels must be positive");
  if (min_input < 1) throw std::invalid_argument("encoder min_input must be positive");
  if (convs.empty()) throw std::invalid_argument("encoder needs at least one conv layer");
  validate_convs(convs, input_channels);
  if (head.in_features != feature_channels()) throw std::invalid_argument("projection head input does not match trunk");
  if (head.out_features < 1) throw std::invalid_argument("projection head output must be positive");
}

std::string EncoderArchitecture::to_json() const {
  ordered_json j;
  j["kind"] = "encoder";
  j["input_channels"] = input_channels;
  j["min_input"] = min_input;
  j["layers"] = ordered_json::array();
  for (const auto& c : convs) j["layers"].push_back(conv_to_json(c));
  j["head"] = ordered_json{{"type", "linear"}, {"in", head.in_features}, {"out", head.out_features}};
  return j.dump();
}

EncoderArchitecture EncoderArchitecture::from_json(const std::string& text) {
  return parse_or_throw(text, [](const ordered_json& j) {
    if (j.at("kind").get<std::string>() != "encoder") throw std::invalid_argument("descriptor is not an encoder");
    EncoderArchitecture a;
    a.input_channels = j.at("input_channels").get<int>();
    a.min_input = j.at("min_input").get<int>();
    for (const auto& l : j.at("layers")) a.convs.push_back(conv_from_json(l));
    a.head.in_features = j.at("head").at("in").get<int>();
    a.head.out_features = j.at("head").at("out").get<int>();
    a.validate();
    return a;
  });
}

DecoderArchitecture DecoderArchitecture::standard(int feature_channels, int hidden) {
  DecoderArchitecture d;
  d.feature_channels = feature_channels;
  d.convs = {ConvSpec{3, d.input_channels(), hidden, 1, true}, ConvSpec{3, hidden, hidden, 1, true},
             ConvSpec{1, hidden, 2, 1, false}};
  d.validate();
  return d;
}

std::size_t DecoderArchitecture::parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : convs) n += c.parameter_count();
  return n;
}

void DecoderArchitecture::validate() const {
  if (feature_channels < 1 || map_channels < 0) throw std::invalid_argument("decoder channel counts invalid");
  if (convs.empty()) throw std::invalid_argument("decoder needs at least one conv layer");
  validate_convs(convs, input_channels());
  for (const auto& c : convs) {
    if (c.stride != 1) throw std::invalid_argument("decoder convs must have stride 1");
  }
  if (convs.back().out_channels != 2) throw std::invalid_argument("decoder must end in 2 logits");
}

std::string DecoderArchitecture::to_json() const {
  ordered_json j;
  j["kind"] = "decoder";
  j["feature_channels"] = feature_channels;
  j["map_channels"] = map_channels;
  j["layers"] = ordered_json::array();
  for (const auto& c : convs) j["layers"].push_back(conv_to_json(c));
  return j.dump();
}

DecoderArchitecture DecoderArchitecture::from_json(const std::string& text) {
  return parse_or_throw(text, [](const ordered_json& j) {
    if (j.at("kind").get<std::string>() != "decoder") throw std::invalid_argument("descriptor is not a decoder");
    DecoderArchitecture d;
    d.feature_channels = j.at("feature_channels").get<int>();
    d.map_channels = j.at("map_channels").get<int>();
    for (const auto& l : j.at("layers")) d.convs.push_back(conv_from_json(l));
    d.validate();
    return d;
  });
}

}  // namespace fsprior::encoder
