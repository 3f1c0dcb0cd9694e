#pragma once

#include <filesystem>
#include <string>

#include "forge/training/train.hpp"

namespace forge::training {

// On disk a checkpoint is a directory holding manifest.json and weights.bin. The blob is
// every network parameter (subnet order as listed in the manifest, weight then bias per
// layer) followed by the flattened forest, all as little-endian IEEE doubles.

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);

/// Throws VersionError on an unknown version, IntegrityError when the blob is truncated
/// or fails its checksum, ConfigError on a malformed manifest.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

std::string manifest_json(const Checkpoint& ckpt, const std::string& weights_sha256, std::size_t weight_count);
std::vector<double> checkpoint_weights(const Checkpoint& ckpt);

}  // namespace forge::training
