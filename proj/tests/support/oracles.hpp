#pragma once

#include "eamnet/tensor.hpp"

namespace eamnet::testing {

// Straight-from-the-definition reference implementations. They favour
// plain loops over speed and share no code with the library.

Tensor conv2d_oracle(const Tensor& x, const Tensor& w, const Tensor* bias, int stride,
                     int padding, int dilation);

/// Half-pixel bilinear sampling, source clamped to the image.
Tensor bilinear_oracle(const Tensor& x, int out_h, int out_w);

/// 1 + amplitude * |mean over the in-image k x k window - gt|.
Tensor pixel_weights_oracle(const Tensor& gt, int window, double amplitude);

double weighted_bce_oracle(const Tensor& logits, const Tensor& gt, const Tensor& w);
double weighted_iou_oracle(const Tensor& logits, const Tensor& gt, const Tensor& w);
double dice_oracle(const Tensor& logits, const Tensor& gt);

double mae_oracle(const Tensor& pred, const Tensor& gt);
double s_measure_oracle(const Tensor& pred, const Tensor& gt, double alpha = 0.5);
double e_measure_oracle(const Tensor& pred, const Tensor& gt);
double wfb_oracle(const Tensor& pred, const Tensor& gt, double beta2 = 1.0);

/// Band of pixels set in the square dilation (radius floor(w/2)) but not in
/// the square erosion (radius ceil(w/2)), windows clipped to the image.
Tensor edge_oracle(const Tensor& mask, int width);

}  // namespace eamnet::testing
