#pragma once

#include <string>

#include "eamnet/ops.hpp"
#include "eamnet/params.hpp"

namespace eamnet {

/// Normalization uses batch statistics in kTrain and running statistics in
/// kEval.
enum class Mode { kTrain, kEval };

inline constexpr double kNormEps = 1e-5;
inline constexpr double kNormMomentum = 0.1;

struct ConvBlockSpec {
  int in_channels = 64;
  int out_channels = 64;
  int kernel = 3;  // 1 or 3
  int dilation = 1;
  int stride = 1;
  bool has_norm = true;
  bool has_activation = true;
};

/// Convolution -> optional batch norm -> optional ReLU, with padding chosen
/// so stride 1 preserves H and W. The convolution carries a bias only when
/// there is no normalization after it.
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(ParamStore& params, const std::string& prefix, ConvBlockSpec spec);

  Var operator()(const Var& x, Mode mode) const;

  const ConvBlockSpec& spec() const { return spec_; }
  const Var& weight() const { return weight_; }
  const Var& bias() const { return bias_; }
  const Var& norm_scale() const { return gamma_; }
  const Var& norm_shift() const { return beta_; }

 private:
  ConvBlockSpec spec_;
  Var weight_, bias_, gamma_, beta_;
  mutable Var running_mean_, running_var_;
};

/// Two-path cross gating between a detail (lower-level) and a semantic
/// (higher-level) feature of identical shape:
///   main   = mask_from_high(f_high) * f_low
///   mirror = mask_from_low(f_low)   * f_high
/// Masks are raw conv-block outputs (ReLU-bounded below, no sigmoid).
class MirrorMultiply {
 public:
  struct Paths {
    Var main;
    Var mirror;
  };

  MirrorMultiply() = default;
  MirrorMultiply(ParamStore& params, const std::string& prefix, int channels,
                 bool with_norm = true);

  Paths operator()(const Var& f_low, const Var& f_high, Mode mode) const;

  const ConvBlock& semantic_mask() const { return semantic_mask_; }
  const ConvBlock& detail_mask() const { return detail_mask_; }

 private:
  ConvBlock semantic_mask_;  // applied to f_high
  ConvBlock detail_mask_;    // applied to f_low
};

/// Multi-scale channel attention: x * sigmoid(L(x) + G(x)), where L is a
/// point-wise C -> C/r -> C bottleneck and G the same bottleneck applied to
/// the global average, broadcast over H x W.
class MsCam {
 public:
  MsCam() = default;
  MsCam(ParamStore& params, const std::string& prefix, int channels,
        int reduction, bool with_norm = true);

  Var operator()(const Var& x, Mode mode) const;
  /// The pre-sigmoid attention logits L(x) + G(x).
  Var attention_logits(const Var& x, Mode mode) const;

 private:
  ConvBlock local_in_, local_out_;
  ConvBlock global_in_, global_out_;
};

/// 1x1 convolution to a single-channel logit map (no activation).
class PredictionHead {
 public:
  PredictionHead() = default;
  PredictionHead(ParamStore& params, const std::string& prefix, int channels);

  Var operator()(const Var& features, Mode mode) const { return conv_(features, mode); }
  const ConvBlock& conv() const { return conv_; }

 private:
  ConvBlock conv_;
};

/// Bilinear upsampling by an integer factor (half-pixel centers).
Var upsample(const Var& x, int factor);

/// Bilinear resize of `x` to the spatial extent of `like`.
Var resize_like(const Var& x, const Var& like);

/// Throws NumericError naming `where` if `x` holds NaN or Inf.
void require_finite(const Var& x, const std::string& where);

/// Throws ContractError unless the two shapes agree.
void require_same_shape(const Shape& a, const Shape& b, const std::string& what);

}  // namespace eamnet
