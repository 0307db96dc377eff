#pragma once

#include <filesystem>
#include <vector>

#include "eamnet/tensor.hpp"

namespace eamnet {

/// Reads an 8-bit PNG as a (1, channels, H, W) tensor in [0,1]. `channels`
/// is 1 (gray) or 3 (RGB); colour conversion is done by libpng.
Tensor read_png(const std::filesystem::path& path, int channels);

/// Writes a (1,1,H,W) or (1,3,H,W) tensor, clamped to [0,1] and rounded to
/// 8 bits.
void write_png(const std::filesystem::path& path, const Tensor& image);

/// Regular files with a .png extension (case-insensitive), sorted by name.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

}  // namespace eamnet
