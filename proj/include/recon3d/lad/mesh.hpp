#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "recon3d/synth/voxel.hpp"

namespace recon3d {

/// Triangle mesh in [-1,1]^3.
struct Mesh {
    std::vector<std::array<float, 3>> vertices;
    std::vector<std::array<int, 3>> triangles;
};

/// Boundary-face mesh of an occupancy grid: every occupied-cell face
/// adjacent to an empty cell (or the grid boundary) contributes two
/// triangles with outward-facing winding. Throws empty_shape_error on an
/// empty grid.
Mesh extract_mesh(const VoxelGrid& grid);

/// ASCII OBJ with v/f records only.
void save_obj(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_obj(const std::filesystem::path& path);

}  // namespace recon3d
