#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eamnet/rng.hpp"
#include "eamnet/tensor.hpp"

namespace eamnet {

/// One image with its camouflage mask and edge mask. Shapes (1,3,H,W),
/// (1,1,H,W), (1,1,H,W); masks are binary.
struct Sample {
  std::string name;
  Tensor image;
  Tensor mask;
  Tensor edge;
};

struct SynthConfig {
  int size = 64;
  /// 0 = salient object, 1 = foreground texture equals the background's.
  double camo_level = 0.6;
  /// Bounds on mask area / image area.
  double object_scale_min = 0.08;
  double object_scale_max = 0.30;
  int edge_width = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Index offset of the held-out split; training indices stay below it.
inline constexpr int kTestIndexBase = 1 << 24;

/// Deterministic in (config.seed, index).
Sample generate_sample(const SynthConfig& config, int index);

/// Square-element morphology; out-of-image pixels are ignored, so objects
/// touching the border are not eroded from outside.
Tensor dilate(const Tensor& mask, int radius);
Tensor erode(const Tensor& mask, int radius);

/// Band dilate(M, floor(w/2)) minus erode(M, ceil(w/2)). Width 1 is the
/// inner one-pixel boundary; width 2 straddles the contour.
Tensor edge_from_mask(const Tensor& mask, int width = 2);

Sample flip_horizontal(const Sample& s);

/// Flips with probability 0.5, drawing one value from `rng`.
Sample augment(const Sample& s, Rng& rng);

/// Samples stacked along the batch axis.
struct Batch {
  Tensor image;
  Tensor mask;
  Tensor edge;
};

Batch make_batch(const std::vector<Sample>& samples);

/// Reads Images/, GT/ and optionally Edge/ PNGs, pairs them by file stem in
/// sorted order and resizes to `size` (bilinear image, nearest masks).
/// When Edge/ is absent the edge mask is edge_from_mask(mask, edge_width).
std::vector<Sample> load_dataset(const std::filesystem::path& root, int size,
                                 int edge_width = 2);

/// Writes Images/<name>.png, GT/<name>.png and Edge/<name>.png under root.
void write_sample(const std::filesystem::path& root, const Sample& s);

}  // namespace eamnet
