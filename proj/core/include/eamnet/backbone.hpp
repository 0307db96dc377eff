#pragma once

#include <array>
#include <vector>

#include "eamnet/blocks.hpp"

namespace eamnet {

struct BackboneConfig {
  std::array<int, 4> stage_channels{32, 64, 128, 256};
  int blocks_per_stage = 2;
  bool operator==(const BackboneConfig&) const = default;
};

/// Output strides of the four pyramid levels relative to the input.
inline constexpr std::array<int, 4> kLevelStrides{4, 8, 16, 32};

/// Plain strided-convolution pyramid: a stride-4 stem (two stride-2
/// conv blocks) feeding stage 1, then one stride-2 conv block per later
/// stage; every stage adds `blocks_per_stage` 3x3 conv blocks.
class Backbone {
 public:
  Backbone() = default;
  Backbone(ParamStore& params, const std::string& prefix,
           const BackboneConfig& config);

  /// Returns f_1..f_4. Throws InputSizeError unless H and W are multiples
  /// of 32.
  std::array<Var, 4> operator()(const Var& image, Mode mode) const;

  const BackboneConfig& config() const { return config_; }

 private:
  BackboneConfig config_;
  std::array<std::vector<ConvBlock>, 4> stages_;
};

}  // namespace eamnet
