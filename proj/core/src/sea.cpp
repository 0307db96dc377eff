#include "eamnet/sea.hpp"

namespace eamnet {

SeaModule::SeaModule(ParamStore& params, const std::string& prefix,
                     int channels) {
  const int c = channels;
  fuse_[0] = ConvBlock(params, join_name(prefix, "fuse.0"), {2 * c, c});
  fuse_[1] = ConvBlock(params, join_name(prefix, "fuse.1"), {c, c});
  mirror_ = MirrorMultiply(params, join_name(prefix, "mirror"), c);
  inject_reduce_ =
      ConvBlock(params, join_name(prefix, "inject"), {2 * c, c, 1});
  refine_[0] = ConvBlock(params, join_name(prefix, "refine.0"), {c, c});
  refine_[1] = ConvBlock(params, join_name(prefix, "refine.1"), {c, c});
}

Var SeaModule::fuse(const Var& f_e, const Var& e_next, Mode mode) const {
  const Shape& s = f_e.shape();
  require_same_shape(e_next.shape(), Shape{s.n, s.c, s.h / 2, s.w / 2},
                     "sea coarser edge feature");
  Var x = ops::concat_channels({f_e, upsample(e_next, 2)});
  return fuse_[1](fuse_[0](x, mode), mode);
}

Var SeaModule::inject(const Var& fused, const Var& s_next, Mode mode) const {
  const Shape& s = fused.shape();
  require_same_shape(s_next.shape(), Shape{s.n, s.c, s.h / 2, s.w / 2},
                     "sea coarser segmentation feature");
  auto paths = mirror_(fused, upsample(s_next, 2), mode);
  return inject_reduce_(ops::concat_channels({paths.main, paths.mirror}), mode);
}

Var SeaModule::refine(const Var& x, Mode mode) const {
  return refine_[1](refine_[0](x, mode), mode);
}

Var SeaModule::operator()(const Var& f_e, const Var& e_next, const Var& s_next,
                          Mode mode) const {
  Var fused = fuse(f_e, e_next, mode);
  return refine(ops::add(inject(fused, s_next, mode), fused), mode);
}

}  // namespace eamnet
