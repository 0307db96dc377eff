#pragma once

#include <filesystem>

#include "eamnet/config.hpp"
#include "eamnet/params.hpp"

namespace eamnet {

/// Binary layout (little-endian): magic "EAMNETCK", u32 version, u64 length
/// and text of the run config, u64 seed, u64 entry count, then per entry a
/// u32 name length, the name, four i32 extents and the float64 values.
struct Checkpoint {
  RunConfig config;
  ParamStore params;
};

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     const ParamStore& params);

/// Rebuilds the parameter store for the stored model config and fills it.
/// Throws IoError on a malformed file and ConfigError when the stored
/// entries do not match the architecture.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws ConfigError when `expected` describes a different architecture
/// than the checkpoint.
void require_same_model(const ModelConfig& expected, const Checkpoint& ckpt);

}  // namespace eamnet
