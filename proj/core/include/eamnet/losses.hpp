#pragma once

#include <array>

#include "eamnet/network.hpp"

namespace eamnet {

struct LossConfig {
  /// Per-level weights 1 / 2^(i-1).
  std::array<double, 3> lambdas{1.0, 0.5, 0.25};
  double bce_weight_amplitude = 5.0;
  int bce_weight_window = 31;

  void validate() const;
};

/// Smoothing term of the IoU and dice ratios.
inline constexpr double kLossSmooth = 1.0;

/// Boundary emphasis w = 1 + amplitude * |mean_k(gt) - gt|, where mean_k is
/// a k x k box mean over in-image pixels only (so flat regions get w = 1
/// up to the border). `gt` must be binary, shape (N,1,H,W).
Tensor pixel_weights(const Tensor& gt, const LossConfig& config);

/// Per-image sum(w * BCE(sigmoid(logit), gt)) / sum(w), averaged over the
/// batch. Computed from logits in a form that does not overflow.
Var weighted_bce(const Var& logits, const Tensor& gt, const Tensor& weights);

/// Per-image 1 - (sum w p g + 1) / (sum w (p + g - p g) + 1), batch mean.
Var weighted_iou(const Var& logits, const Tensor& gt, const Tensor& weights);

/// Per-image 1 - (2 sum p g + 1) / (sum p + sum g + 1), batch mean.
Var dice_loss(const Var& logits, const Tensor& gt_edge);

struct LossBreakdown {
  Var total;
  std::array<double, 3> bce{};
  std::array<double, 3> iou{};
  std::array<double, 3> dice{};
};

/// Co-supervision objective over the three levels. Every prediction is
/// bilinearly upsampled to the mask resolution before its term.
LossBreakdown total_loss(const PredictionSet& preds, const Tensor& mask,
                         const Tensor& edge, const LossConfig& config);

}  // namespace eamnet
