#include "eamnet/backbone.hpp"

#include "eamnet/errors.hpp"

namespace eamnet {

Backbone::Backbone(ParamStore& params, const std::string& prefix,
                   const BackboneConfig& config)
    : config_(config) {
  for (int i = 0; i < 4; ++i) {
    if (config.stage_channels[i] < 1) {
      throw ConfigError("backbone stage channels must be positive");
    }
    if (i > 0 && config.stage_channels[i] <= config.stage_channels[i - 1]) {
      throw ConfigError("backbone stage channels must strictly increase");
    }
  }
  if (config.blocks_per_stage < 0) {
    throw ConfigError("backbone blocks_per_stage must be non-negative");
  }
  int in = 3;
  for (int i = 0; i < 4; ++i) {
    const int out = config.stage_channels[i];
    const std::string stage = join_name(prefix, "stage" + std::to_string(i + 1));
    auto& blocks = stages_[i];
    if (i == 0) {
      blocks.emplace_back(params, join_name(stage, "stem0"),
                          ConvBlockSpec{in, out, 3, 1, 2, true, true});
      blocks.emplace_back(params, join_name(stage, "stem1"),
                          ConvBlockSpec{out, out, 3, 1, 2, true, true});
    } else {
      blocks.emplace_back(params, join_name(stage, "down"),
                          ConvBlockSpec{in, out, 3, 1, 2, true, true});
    }
    for (int b = 0; b < config.blocks_per_stage; ++b) {
      blocks.emplace_back(params, join_name(stage, "block" + std::to_string(b)),
                          ConvBlockSpec{out, out, 3, 1, 1, true, true});
    }
    in = out;
  }
}

std::array<Var, 4> Backbone::operator()(const Var& image, Mode mode) const {
  const Shape& s = image.shape();
  if (s.c != 3) {
    throw ContractError("backbone expects 3-channel images, got " + s.str());
  }
  if (s.h % 32 != 0 || s.w % 32 != 0) {
    throw InputSizeError("input height and width must be divisible by 32, got " +
                         std::to_string(s.h) + "x" + std::to_string(s.w));
  }
  std::array<Var, 4> features;
  Var x = image;
  for (int i = 0; i < 4; ++i) {
    for (const auto& block : stages_[i]) x = block(x, mode);
    features[i] = x;
  }
  return features;
}

}  // namespace eamnet
