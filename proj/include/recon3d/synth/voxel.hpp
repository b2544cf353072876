#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recon3d/common/error.hpp"

namespace recon3d {

/// R x R x R binary occupancy grid in the unit cube [-1,1]^3.
/// Linear index: i = x + R*(y + R*z); cell (x,y,z) spans
/// [-1 + 2x/R, -1 + 2(x+1)/R) along X, likewise Y and Z.
struct VoxelGrid {
    int resolution = 0;
    std::vector<std::uint8_t> occupancy;  // values in {0,1}, size R^3
    std::string provenance;               // generating spec, when known

    VoxelGrid() = default;
    explicit VoxelGrid(int r)
        : resolution(r), occupancy(static_cast<std::size_t>(r) * r * r, 0) {}

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(resolution) *
                   (static_cast<std::size_t>(y) +
                    static_cast<std::size_t>(resolution) * static_cast<std::size_t>(z));
    }

    std::uint8_t at(int x, int y, int z) const { return occupancy[index(x, y, z)]; }
    void set(int x, int y, int z, std::uint8_t v) { occupancy[index(x, y, z)] = v; }

    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < resolution && y < resolution && z < resolution;
    }

    std::size_t occupied_count() const {
        std::size_t n = 0;
        for (auto v : occupancy) n += v;
        return n;
    }

    bool empty() const { return occupied_count() == 0; }

    /// Center of cell (x,y,z) in world coordinates.
    void cell_center(int x, int y, int z, double& cx, double& cy, double& cz) const {
        double step = 2.0 / resolution;
        cx = -1.0 + (x + 0.5) * step;
        cy = -1.0 + (y + 0.5) * step;
        cz = -1.0 + (z + 0.5) * step;
    }
};

}  // namespace recon3d
