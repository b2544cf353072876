#pragma once

#include <filesystem>

#include "recon3d/synth/voxel.hpp"

namespace recon3d {

// Bit-packed occupancy with a 16-byte header:
//   bytes 0..3   magic "VOX1"
//   bytes 4..7   u32 resolution R
//   bytes 8..15  reserved (zero)
// Then ceil(R^3 / 8) bytes; bit i (LSB-first within each byte) holds the
// cell at linear index i = x + R*(y + R*z).

void save_voxel(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid load_voxel(const std::filesystem::path& path);

}  // namespace recon3d
