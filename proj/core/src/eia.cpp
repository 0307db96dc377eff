#include "eamnet/eia.hpp"

#include "eamnet/errors.hpp"

namespace eamnet {

EiaModule::EiaModule(ParamStore& params, const std::string& prefix,
                     const EiaConfig& config)
    : config_(config) {
  const int c = config.channels;
  for (int j = 1; j < 3; ++j) {
    if (config.dilations[j] <= config.dilations[j - 1]) {
      throw ConfigError(prefix + ": dilations must be strictly increasing");
    }
  }
  mirror_ = MirrorMultiply(params, join_name(prefix, "mirror"), c);
  fuse_[0] = ConvBlock(params, join_name(prefix, "fuse.0"), {3 * c, c});
  fuse_[1] = ConvBlock(params, join_name(prefix, "fuse.1"), {c, c});
  for (int j = 0; j < 3; ++j) {
    const std::string branch = join_name(prefix, "branch" + std::to_string(j));
    branches_[j][0] = ConvBlock(params, join_name(branch, "0"), {c, c});
    branches_[j][1] = ConvBlock(params, join_name(branch, "atrous"),
                                {c, c, 3, config.dilations[j]});
  }
  reduce_[0] = ConvBlock(params, join_name(prefix, "reduce.0"), {3 * c, c});
  reduce_[1] = ConvBlock(params, join_name(prefix, "reduce.1"), {c, c});
  attention_ = MsCam(params, join_name(prefix, "attention"), c,
                     config.attention_reduction);
}

Var EiaModule::fuse(const Var& f_s, const Var& s_next, const Var& edge,
                    Mode mode) const {
  const Shape& s = f_s.shape();
  require_same_shape(edge.shape(), s, "eia edge feature");
  require_same_shape(s_next.shape(), Shape{s.n, s.c, s.h / 2, s.w / 2},
                     "eia coarser segmentation feature");
  Var s_up = upsample(s_next, 2);
  auto paths = mirror_(f_s, s_up, mode);
  Var x = ops::concat_channels({paths.main, paths.mirror, edge});
  return fuse_[1](fuse_[0](x, mode), mode);
}

Var EiaModule::branches(const Var& fused, Mode mode) const {
  std::array<Var, 3> outs;
  for (int j = 0; j < 3; ++j) {
    outs[j] = branches_[j][1](branches_[j][0](fused, mode), mode);
  }
  return ops::concat_channels(outs);
}

Var EiaModule::explore(const Var& fused, Mode mode) const {
  Var x = reduce_[1](reduce_[0](branches(fused, mode), mode), mode);
  return attention_(x, mode);
}

Var EiaModule::operator()(const Var& f_s, const Var& s_next, const Var& edge,
                          Mode mode) const {
  return explore(fuse(f_s, s_next, edge, mode), mode);
}

}  // namespace eamnet
