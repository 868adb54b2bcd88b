#pragma once

#include <filesystem>
#include <string>

#include "tinyunet/scenegen.hpp"

namespace tinyunet::scene {

// On-disk layout: <dir>/manifest.json plus one .bin per scene holding the
// little-endian f32 cube followed by the byte-per-pixel label map. The
// manifest records configs, per-scene seeds, split membership and an FNV-1a64
// checksum per record; loading refuses corrupted records.
std::filesystem::path save_dataset(const std::filesystem::path& dir, const SceneSet& train, const SceneSet& val,
                                   std::uint64_t master_seed);

struct LoadedDataset {
    SceneSet train, val;
    std::uint64_t master_seed = 0;
};

LoadedDataset load_dataset(const std::filesystem::path& dir);

// Grayscale PGM of a label map (classes stretched over 0..255) for eyeballing.
void write_label_pgm(const std::filesystem::path& path, const ClassMap& labels, int scene_index = 0);

std::uint64_t fnv1a64(const void* data, std::size_t len);

}  // namespace tinyunet::scene
