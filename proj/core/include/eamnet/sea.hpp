#pragma once

#include <array>

#include "eamnet/blocks.hpp"

namespace eamnet {

/// Segmentation-induced edge aggregation: fuse two edge levels, inject the
/// coarser segmentation feature through mirror multiplication with a
/// residual connection, then refine with two 3x3 conv blocks.
class SeaModule {
 public:
  SeaModule() = default;
  SeaModule(ParamStore& params, const std::string& prefix, int channels);

  /// f_e: (N,C,H,W); e_next, s_next: (N,C,H/2,W/2).
  Var operator()(const Var& f_e, const Var& e_next, const Var& s_next,
                 Mode mode) const;

  /// Two 3x3 conv blocks over concat(f_e, up(e_next)).
  Var fuse(const Var& f_e, const Var& e_next, Mode mode) const;
  /// 1x1 reduction of both mirror paths between `fused` and up(s_next).
  Var inject(const Var& fused, const Var& s_next, Mode mode) const;
  /// Final two 3x3 conv blocks.
  Var refine(const Var& x, Mode mode) const;

  const MirrorMultiply& mirror() const { return mirror_; }
  const ConvBlock& inject_reduce() const { return inject_reduce_; }

 private:
  std::array<ConvBlock, 2> fuse_;
  MirrorMultiply mirror_;
  ConvBlock inject_reduce_;
  std::array<ConvBlock, 2> refine_;
};

}  // namespace eamnet
