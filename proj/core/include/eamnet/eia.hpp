#pragma once

#include <array>

#include "eamnet/blocks.hpp"

namespace eamnet {

struct EiaConfig {
  int channels = 64;
  std::array<int, 3> dilations{1, 3, 5};
  int attention_reduction = 4;
  bool operator==(const EiaConfig&) const = default;
};

/// Edge-induced integrity aggregation.
///
/// Stage one fuses the level-i segmentation feature with the upsampled
/// coarser segmentation output through both mirror-multiplication paths,
/// concatenates the edge feature of the same level and fuses the 3C stack
/// down to C with two 3x3 conv blocks. Stage two runs three branches (3x3
/// conv block, then a 3x3 atrous conv block with dilation n_j), reduces
/// their 3C concatenation with two 3x3 conv blocks and applies MS-CAM.
class EiaModule {
 public:
  EiaModule() = default;
  EiaModule(ParamStore& params, const std::string& prefix,
            const EiaConfig& config);

  /// f_s: (N,C,H,W); s_next: (N,C,H/2,W/2); edge: (N,C,H,W).
  Var operator()(const Var& f_s, const Var& s_next, const Var& edge,
                 Mode mode) const;

  /// Stage one only: the edge-guided fused feature.
  Var fuse(const Var& f_s, const Var& s_next, const Var& edge, Mode mode) const;
  /// Concatenated branch outputs (3C channels) before reduction.
  Var branches(const Var& fused, Mode mode) const;
  /// Stage two applied to a fused feature.
  Var explore(const Var& fused, Mode mode) const;

  const EiaConfig& config() const { return config_; }

 private:
  EiaConfig config_;
  MirrorMultiply mirror_;
  std::array<ConvBlock, 2> fuse_;
  std::array<std::array<ConvBlock, 2>, 3> branches_;
  std::array<ConvBlock, 2> reduce_;
  MsCam attention_;
};

}  // namespace eamnet
