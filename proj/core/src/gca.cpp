#include "eamnet/gca.hpp"

#include "eamnet/errors.hpp"

namespace eamnet {

GcaModule::GcaModule(ParamStore& params, const std::string& prefix,
                     int channels, int attention_reduction) {
  const int c = channels;
  semantic_conv_ = ConvBlock(params, join_name(prefix, "semantic"), {c, c, 1});
  guide_conv_ = ConvBlock(params, join_name(prefix, "guide"),
                          {2 * c, 1, 1, 1, 1, false, false});
  gate_conv_ = ConvBlock(params, join_name(prefix, "gate"), {c, c, 1});
  body_[0] = ConvBlock(params, join_name(prefix, "body.0"), {c, c});
  body_[1] = ConvBlock(params, join_name(prefix, "body.1"),
                       {c, c, 3, 1, 1, true, false});
  attention_ = MsCam(params, join_name(prefix, "attention"), c,
                     attention_reduction);
}

Var GcaModule::guide_flow(const Var& detail, const Var& semantic,
                          Mode mode) const {
  const Shape& d = detail.shape();
  const Shape& s = semantic.shape();
  if (s.n != d.n || s.c != d.c) {
    throw ContractError("gca: semantic feature " + s.str() +
                        " incompatible with detail feature " + d.str());
  }
  if (s.h > d.h || s.w > d.w) {
    throw ContractError("gca: semantic feature must not be finer than detail");
  }
  Var s_up = resize_like(semantic, detail);
  Var stacked = ops::concat_channels({detail, semantic_conv_(s_up, mode)});
  return ops::sigmoid(guide_conv_(stacked, mode));
}

Var GcaModule::gated_detail(const Var& detail, const Var& guidance,
                            Mode mode) const {
  return gate_conv_(ops::add(ops::mul(guidance, detail), detail), mode);
}

Var GcaModule::attend(const Var& gated, Mode mode) const {
  return attention_(body_[1](body_[0](gated, mode), mode), mode);
}

Var GcaModule::operator()(const Var& detail, const Var& semantic,
                          Mode mode) const {
  Var gated = gated_detail(detail, guide_flow(detail, semantic, mode), mode);
  return ops::add(attend(gated, mode), gated);
}

}  // namespace eamnet
