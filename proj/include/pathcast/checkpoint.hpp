#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pathcast/metapath_network.hpp"

namespace pathcast {

/// Single-file checkpoint: a JSON manifest (dimensions, config hash) plus
/// one named tensor per parameter group, stored as little-endian float32.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t config_hash);

struct LoadedCheckpoint {
  ModelParams params;
  std::uint64_t config_hash = 0;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pathcast
