#include "eamnet/blocks.hpp"

#include "eamnet/errors.hpp"

namespace eamnet {

ConvBlock::ConvBlock(ParamStore& params, const std::string& prefix,
                     ConvBlockSpec spec)
    : spec_(spec) {
  if (spec.kernel != 1 && spec.kernel != 3) {
    throw ConfigError(prefix + ": kernel must be 1 or 3, got " +
                      std::to_string(spec.kernel));
  }
  if (spec.in_channels < 1 || spec.out_channels < 1 || spec.dilation < 1 ||
      spec.stride < 1) {
    throw ConfigError(prefix + ": channel counts, dilation and stride must be positive");
  }
  const int fan_in = spec.in_channels * spec.kernel * spec.kernel;
  weight_ = params.declare(
      join_name(prefix, "weight"),
      Shape{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel},
      ParamKind::kWeight, fan_in);
  const Shape per_channel{1, spec.out_channels, 1, 1};
  if (spec.has_norm) {
    gamma_ = params.declare(join_name(prefix, "norm.scale"), per_channel,
                            ParamKind::kNormScale);
    beta_ = params.declare(join_name(prefix, "norm.shift"), per_channel,
                           ParamKind::kNormShift);
    running_mean_ = params.declare(join_name(prefix, "norm.running_mean"),
                                   per_channel, ParamKind::kRunningMean);
    running_var_ = params.declare(join_name(prefix, "norm.running_var"),
                                  per_channel, ParamKind::kRunningVar);
  } else {
    bias_ = params.declare(join_name(prefix, "bias"), per_channel,
                           ParamKind::kBias);
  }
}

Var ConvBlock::operator()(const Var& x, Mode mode) const {
  if (x.shape().c != spec_.in_channels) {
    throw ConfigError("conv_block expects " + std::to_string(spec_.in_channels) +
                      " input channels, got " + std::to_string(x.shape().c));
  }
  if (!x.value().all_finite()) {
    throw NumericError("conv_block received non-finite input");
  }
  ops::Conv2dOptions opts;
  opts.stride = spec_.stride;
  opts.dilation = spec_.dilation;
  opts.padding = spec_.dilation * (spec_.kernel - 1) / 2;
  Var y = ops::conv2d(x, weight_, bias_, opts);
  if (spec_.has_norm) {
    y = ops::batch_norm(y, gamma_, beta_, running_mean_, running_var_,
                        mode == Mode::kTrain, kNormMomentum, kNormEps);
  }
  if (spec_.has_activation) y = ops::relu(y);
  return y;
}

MirrorMultiply::MirrorMultiply(ParamStore& params, const std::string& prefix,
                               int channels, bool with_norm) {
  ConvBlockSpec spec{channels, channels, 3, 1, 1, with_norm, true};
  semantic_mask_ = ConvBlock(params, join_name(prefix, "semantic_mask"), spec);
  detail_mask_ = ConvBlock(params, join_name(prefix, "detail_mask"), spec);
}

MirrorMultiply::Paths MirrorMultiply::operator()(const Var& f_low,
                                                 const Var& f_high,
                                                 Mode mode) const {
  require_same_shape(f_low.shape(), f_high.shape(), "mirror_multiply");
  Paths out;
  out.main = ops::mul(semantic_mask_(f_high, mode), f_low);
  out.mirror = ops::mul(detail_mask_(f_low, mode), f_high);
  return out;
}

MsCam::MsCam(ParamStore& params, const std::string& prefix, int channels,
             int reduction, bool with_norm) {
  if (reduction < 1 || channels % reduction != 0) {
    throw ConfigError(prefix + ": channels " + std::to_string(channels) +
                      " not divisible by reduction " + std::to_string(reduction));
  }
  const int inner = channels / reduction;
  ConvBlockSpec squeeze{channels, inner, 1, 1, 1, with_norm, true};
  ConvBlockSpec expand{inner, channels, 1, 1, 1, with_norm, false};
  local_in_ = ConvBlock(params, join_name(prefix, "local.0"), squeeze);
  local_out_ = ConvBlock(params, join_name(prefix, "local.1"), expand);
  global_in_ = ConvBlock(params, join_name(prefix, "global.0"), squeeze);
  global_out_ = ConvBlock(params, join_name(prefix, "global.1"), expand);
}

Var MsCam::attention_logits(const Var& x, Mode mode) const {
  Var local = local_out_(local_in_(x, mode), mode);
  Var global = global_out_(global_in_(ops::global_avg_pool(x), mode), mode);
  return ops::add(local, global);
}

Var MsCam::operator()(const Var& x, Mode mode) const {
  return ops::mul(x, ops::sigmoid(attention_logits(x, mode)));
}

PredictionHead::PredictionHead(ParamStore& params, const std::string& prefix,
                               int channels)
    : conv_(params, prefix, ConvBlockSpec{channels, 1, 1, 1, 1, false, false}) {}

Var upsample(const Var& x, int factor) {
  if (factor < 1) {
    throw ContractError("upsample factor must be >= 1, got " +
                        std::to_string(factor));
  }
  if (factor == 1) return x;
  return ops::resize_bilinear(x, x.shape().h * factor, x.shape().w * factor);
}

Var resize_like(const Var& x, const Var& like) {
  if (x.shape().h == like.shape().h && x.shape().w == like.shape().w) return x;
  return ops::resize_bilinear(x, like.shape().h, like.shape().w);
}

void require_finite(const Var& x, const std::string& where) {
  if (!x.value().all_finite()) {
    throw NumericError(where + " produced non-finite activations");
  }
}

void require_same_shape(const Shape& a, const Shape& b, const std::string& what) {
  if (!(a == b)) {
    throw ContractError(what + ": shape " + a.str() + " does not match " +
                        b.str());
  }
}

}  // namespace eamnet
