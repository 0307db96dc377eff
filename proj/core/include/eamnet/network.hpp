#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "eamnet/backbone.hpp"
#include "eamnet/eia.hpp"
#include "eamnet/gca.hpp"
#include "eamnet/sea.hpp"

namespace eamnet {

enum class Variant {
  kFull,
  /// Edge features computed once from backbone levels 1 and 4; no SEA
  /// cascade, no edge-branch GCAs, no segmentation guidance into edges.
  kNoEdgeBranch,
};

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);

struct ModelConfig {
  BackboneConfig backbone;
  EiaConfig eia;  // eia.channels mirrors reduced_channels
  int reduced_channels = 64;
  int input_size = 384;
  Variant variant = Variant::kFull;

  /// Toy configuration used by tests and the desk-scale training runs.
  static ModelConfig toy();
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Logit maps; index 0 is the finest level (stride 4).
struct PredictionSet {
  std::array<Var, 3> seg;
  std::array<Var, 3> edge;
};

/// Every intermediate feature of one forward pass. Arrays are indexed by
/// level - 1, so `seg[3]` is S_4.
struct ForwardTrace {
  std::array<Var, 4> features;
  std::array<Var, 4> edge_reduced;  // f^e_i (undefined where unused)
  std::array<Var, 4> seg_reduced;   // f^s_i
  Var edge_detail;                  // f^e_1 after the GCA chain
  Var seg_detail;                   // f^s_1 after the GCA chain
  std::array<Var, 4> edge;          // E_i
  std::array<Var, 4> seg;           // S_i
  PredictionSet predictions;
};

class EamNet {
 public:
  /// Declares (or binds to already declared) parameters in `params`.
  EamNet(const ModelConfig& config, ParamStore& params);

  PredictionSet forward(const Var& image, Mode mode) const;
  ForwardTrace trace(const Var& image, Mode mode) const;

  const ModelConfig& config() const { return config_; }
  const Backbone& backbone() const { return backbone_; }
  /// Level is 1..3.
  const SeaModule& sea(int level) const { return sea_.at(level - 1); }
  const EiaModule& eia(int level) const { return eia_.at(level - 1); }
  /// Chain position 0..2 (guided by level 4, 3, 2 respectively).
  const GcaModule& seg_gca(int k) const { return seg_gca_.at(k); }
  const GcaModule& edge_gca(int k) const { return edge_gca_.at(k); }
  const PredictionHead& seg_head(int level) const { return seg_head_.at(level - 1); }
  const PredictionHead& edge_head(int level) const { return edge_head_.at(level - 1); }

 private:
  ForwardTrace run(const Var& image, Mode mode) const;

  ModelConfig config_;
  Backbone backbone_;
  std::array<std::optional<ConvBlock>, 4> reduce_edge_;
  std::array<ConvBlock, 4> reduce_seg_;
  std::array<SeaModule, 3> sea_;
  std::array<EiaModule, 3> eia_;
  std::array<GcaModule, 3> seg_gca_;
  std::array<GcaModule, 3> edge_gca_;
  std::array<ConvBlock, 2> early_edge_;
  std::array<PredictionHead, 3> seg_head_;
  std::array<PredictionHead, 3> edge_head_;
};

/// Declares every parameter of `config` and draws weights from `seed`.
ParamStore init_params(const ModelConfig& config, std::uint64_t seed);

/// sigmoid(P^s_1) in eval mode, bilinearly resized to (out_h, out_w).
/// Returns (N,1,out_h,out_w) with values in [0,1].
Tensor predict_mask(const EamNet& net, const Tensor& image, int out_h,
                    int out_w);
/// Same for the finest edge prediction.
Tensor predict_edge(const EamNet& net, const Tensor& image, int out_h,
                    int out_w);

}  // namespace eamnet
