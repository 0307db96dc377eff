#pragma once

#include <span>

#include "eamnet/autograd.hpp"

namespace eamnet::ops {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

/// Cross-correlation with weight (Cout, Cin, k, k). `bias` may be undefined;
/// otherwise it has shape (1, Cout, 1, 1).
Var conv2d(const Var& x, const Var& weight, const Var& bias,
           const Conv2dOptions& opts);

/// Per-channel normalization over (N, H, W). In training mode the batch
/// statistics are used and the running buffers are updated with `momentum`;
/// otherwise the running buffers are used.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta,
               Var& running_mean, Var& running_var, bool training,
               double momentum = 0.1, double eps = 1e-5);

Var relu(const Var& x);
Var sigmoid(const Var& x);

/// Element-wise ops with broadcasting: each extent must match or be 1.
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);

Var concat_channels(std::span<const Var> parts);
Var concat_channels(std::initializer_list<Var> parts);

/// Bilinear resampling with half-pixel centers (corners not aligned).
Var resize_bilinear(const Var& x, int out_h, int out_w);

/// Mean over H and W, giving (N, C, 1, 1).
Var global_avg_pool(const Var& x);

Var sum(const Var& x);
/// Scalar sum(x * weights) with constant weights of x's shape.
Var weighted_sum(const Var& x, const Tensor& weights);

/// Forward-only bilinear resize on plain tensors.
Tensor resize_bilinear(const Tensor& x, int out_h, int out_w);
/// Forward-only nearest-neighbour resize (keeps masks binary).
Tensor resize_nearest(const Tensor& x, int out_h, int out_w);

}  // namespace eamnet::ops
