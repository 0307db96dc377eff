#pragma once

#include <array>

#include "eamnet/blocks.hpp"

namespace eamnet {

/// Guided-residual channel attention over a level-1 detail feature D,
/// guided by a coarser semantic feature S:
///
///   G      = sigmoid(conv1x1(concat(D, convblock1x1(up(S)))))   in [0,1]
///   D~     = convblock1x1(G * D + D)
///   D_out  = MS-CAM(conv3x3 -> ReLU -> conv3x3 (D~)) + D~
///
/// The guidance convolution has a bias and no normalization, so zeroing it
/// gives G = 0.5 everywhere.
class GcaModule {
 public:
  GcaModule() = default;
  GcaModule(ParamStore& params, const std::string& prefix, int channels,
            int attention_reduction = 4);

  Var operator()(const Var& detail, const Var& semantic, Mode mode) const;

  /// Guidance map G, shape (N,1,H,W) at the detail resolution.
  Var guide_flow(const Var& detail, const Var& semantic, Mode mode) const;
  /// D~ from a given guidance map.
  Var gated_detail(const Var& detail, const Var& guidance, Mode mode) const;
  /// MS-CAM(body(D~)) without the residual.
  Var attend(const Var& gated, Mode mode) const;

  const ConvBlock& guide_conv() const { return guide_conv_; }
  const ConvBlock& gate_conv() const { return gate_conv_; }
  const std::array<ConvBlock, 2>& body() const { return body_; }

 private:
  ConvBlock semantic_conv_;
  ConvBlock guide_conv_;
  ConvBlock gate_conv_;
  std::array<ConvBlock, 2> body_;
  MsCam attention_;
};

}  // namespace eamnet
