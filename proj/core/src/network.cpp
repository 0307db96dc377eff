#include "eamnet/network.hpp"

#include "eamnet/errors.hpp"

namespace eamnet {

std::string to_string(Variant v) {
  return v == Variant::kFull ? "full" : "no_edge_branch";
}

Variant parse_variant(const std::string& text) {
  if (text == "full") return Variant::kFull;
  if (text == "no_edge_branch") return Variant::kNoEdgeBranch;
  throw ConfigError("unknown model variant '" + text +
                    "' (expected full or no_edge_branch)");
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.input_size = 64;
  return c;
}

void ModelConfig::validate() const {
  if (input_size < 32 || input_size % 32 != 0) {
    throw ConfigError("input_size must be a positive multiple of 32, got " +
                      std::to_string(input_size));
  }
  if (reduced_channels < 1) throw ConfigError("reduced_channels must be positive");
  const auto& widths = backbone.stage_channels;
  if (widths[0] < 1) throw ConfigError("backbone stage channels must be positive");
  for (int i = 1; i < 4; ++i) {
    if (widths[i] <= widths[i - 1]) {
      throw ConfigError("backbone stage channels must strictly increase");
    }
  }
  if (backbone.blocks_per_stage < 0) {
    throw ConfigError("backbone blocks_per_stage must be non-negative");
  }
  if (eia.channels != reduced_channels) {
    throw ConfigError("eia channels (" + std::to_string(eia.channels) +
                      ") must equal reduced_channels (" +
                      std::to_string(reduced_channels) + ")");
  }
  if (reduced_channels % eia.attention_reduction != 0) {
    throw ConfigError("reduced_channels not divisible by attention reduction");
  }
}

EamNet::EamNet(const ModelConfig& config, ParamStore& params) : config_(config) {
  config.validate();
  const int c = config.reduced_channels;
  const bool full = config.variant == Variant::kFull;
  backbone_ = Backbone(params, "backbone", config.backbone);
  for (int i = 0; i < 4; ++i) {
    const std::string level = std::to_string(i + 1);
    const int in = config.backbone.stage_channels[i];
    reduce_seg_[i] = ConvBlock(params, "reduce.seg" + level, {in, c, 1});
    if (full || i == 0 || i == 3) {
      reduce_edge_[i].emplace(params, "reduce.edge" + level,
                              ConvBlockSpec{in, c, 1});
    }
  }
  for (int i = 0; i < 3; ++i) {
    const std::string level = std::to_string(i + 1);
    if (full) sea_[i] = SeaModule(params, "sea" + level, c);
    eia_[i] = EiaModule(params, "eia" + level, config.eia);
    seg_gca_[i] = GcaModule(params, "gca.seg" + std::to_string(i),
                            c, config.eia.attention_reduction);
    if (full) {
      edge_gca_[i] = GcaModule(params, "gca.edge" + std::to_string(i), c,
                               config.eia.attention_reduction);
    }
    seg_head_[i] = PredictionHead(params, "head.seg" + level, c);
    edge_head_[i] = PredictionHead(params, "head.edge" + level, c);
  }
  if (!full) {
    early_edge_[0] = ConvBlock(params, "early_edge.0", {2 * c, c});
    early_edge_[1] = ConvBlock(params, "early_edge.1", {c, c});
  }
}

ForwardTrace EamNet::run(const Var& image, Mode mode) const {
  const Shape& s = image.shape();
  if (s.h != config_.input_size || s.w != config_.input_size) {
    if (s.h % 32 != 0 || s.w % 32 != 0) {
      throw InputSizeError("input height and width must be divisible by 32, got " +
                           std::to_string(s.h) + "x" + std::to_string(s.w));
    }
    throw InputSizeError("input is " + std::to_string(s.h) + "x" +
                         std::to_string(s.w) + ", model expects " +
                         std::to_string(config_.input_size) + "x" +
                         std::to_string(config_.input_size));
  }
  ForwardTrace t;
  t.features = backbone_(image, mode);
  for (int i = 0; i < 4; ++i) require_finite(t.features[i], "backbone level " + std::to_string(i + 1));
  for (int i = 0; i < 4; ++i) {
    t.seg_reduced[i] = reduce_seg_[i](t.features[i], mode);
    if (reduce_edge_[i]) t.edge_reduced[i] = (*reduce_edge_[i])(t.features[i], mode);
  }

  if (config_.variant == Variant::kFull) {
    t.edge[3] = t.edge_reduced[3];
    t.seg[3] = t.seg_reduced[3];
    for (int i = 2; i >= 1; --i) {
      t.edge[i] = sea_[i](t.edge_reduced[i], t.edge[i + 1], t.seg[i + 1], mode);
      require_finite(t.edge[i], "sea" + std::to_string(i + 1));
      t.seg[i] = eia_[i](t.seg_reduced[i], t.seg[i + 1], t.edge[i], mode);
      require_finite(t.seg[i], "eia" + std::to_string(i + 1));
    }
    Var de = t.edge_reduced[0];
    Var ds = t.seg_reduced[0];
    for (int k = 0; k < 3; ++k) {
      de = edge_gca_[k](de, t.edge[3 - k], mode);
      require_finite(de, "edge gca" + std::to_string(k));
      ds = seg_gca_[k](ds, t.seg[3 - k], mode);
      require_finite(ds, "seg gca" + std::to_string(k));
    }
    t.edge_detail = de;
    t.seg_detail = ds;
    t.edge[0] = sea_[0](de, t.edge[1], t.seg[1], mode);
    require_finite(t.edge[0], "sea1");
    t.seg[0] = eia_[0](ds, t.seg[1], t.edge[0], mode);
    require_finite(t.seg[0], "eia1");
  } else {
    // Single early edge feature at level 1, resampled to the other levels.
    Var coarse = resize_like(t.edge_reduced[3], t.edge_reduced[0]);
    Var early = early_edge_[1](
        early_edge_[0](ops::concat_channels({t.edge_reduced[0], coarse}), mode),
        mode);
    require_finite(early, "early edge");
    t.edge[0] = early;
    for (int i = 1; i < 3; ++i) {
      t.edge[i] = resize_like(early, t.seg_reduced[i]);
    }
    t.seg[3] = t.seg_reduced[3];
    for (int i = 2; i >= 1; --i) {
      t.seg[i] = eia_[i](t.seg_reduced[i], t.seg[i + 1], t.edge[i], mode);
      require_finite(t.seg[i], "eia" + std::to_string(i + 1));
    }
    Var ds = t.seg_reduced[0];
    for (int k = 0; k < 3; ++k) {
      ds = seg_gca_[k](ds, t.seg[3 - k], mode);
      require_finite(ds, "seg gca" + std::to_string(k));
    }
    t.seg_detail = ds;
    t.seg[0] = eia_[0](ds, t.seg[1], t.edge[0], mode);
    require_finite(t.seg[0], "eia1");
  }

  for (int i = 0; i < 3; ++i) {
    t.predictions.seg[i] = seg_head_[i](t.seg[i], mode);
    t.predictions.edge[i] = edge_head_[i](t.edge[i], mode);
    require_finite(t.predictions.seg[i], "seg head " + std::to_string(i + 1));
    require_finite(t.predictions.edge[i], "edge head " + std::to_string(i + 1));
  }
  return t;
}

PredictionSet EamNet::forward(const Var& image, Mode mode) const {
  return run(image, mode).predictions;
}

ForwardTrace EamNet::trace(const Var& image, Mode mode) const {
  return run(image, mode);
}

ParamStore init_params(const ModelConfig& config, std::uint64_t seed) {
  ParamStore params;
  EamNet net(config, params);
  params.randomize(seed);
  return params;
}

namespace {

Tensor predict_map(const EamNet& net, const Tensor& image, int out_h, int out_w,
                   bool edge) {
  if (out_h < 1 || out_w < 1) {
    throw ContractError("prediction size must be positive");
  }
  NoGradGuard no_grad;
  PredictionSet p = net.forward(Var(image), Mode::kEval);
  Var logits = edge ? p.edge[0] : p.seg[0];
  return ops::resize_bilinear(ops::sigmoid(logits).value(), out_h, out_w);
}

}  // namespace

Tensor predict_mask(const EamNet& net, const Tensor& image, int out_h,
                    int out_w) {
  return predict_map(net, image, out_h, out_w, false);
}

Tensor predict_edge(const EamNet& net, const Tensor& image, int out_h,
                    int out_w) {
  return predict_map(net, image, out_h, out_w, true);
}

}  // namespace eamnet
