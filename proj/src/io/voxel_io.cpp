#include "recon3d/io/voxel_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace recon3d {

void save_voxel(const VoxelGrid& grid, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write voxel grid: " + path.string());
    char header[16] = {};
    std::memcpy(header, "VOX1", 4);
    std::uint32_t r = static_cast<std::uint32_t>(grid.resolution);
    std::memcpy(header + 4, &r, 4);
    f.write(header, 16);
    std::size_t n = grid.occupancy.size();
    std::vector<std::uint8_t> packed((n + 7) / 8, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (grid.occupancy[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    f.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
    if (!f) throw io_error("short write: " + path.string());
}

VoxelGrid load_voxel(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot read voxel grid: " + path.string());
    char header[16];
    f.read(header, 16);
    if (!f || std::memcmp(header, "VOX1", 4) != 0)
        throw io_error("bad voxel magic: " + path.string());
    std::uint32_t r = 0;
    std::memcpy(&r, header + 4, 4);
    if (r == 0 || r > 512) throw io_error("implausible voxel resolution: " + path.string());
    VoxelGrid grid(static_cast<int>(r));
    std::size_t n = grid.occupancy.size();
    std::vector<std::uint8_t> packed((n + 7) / 8);
    f.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    if (!f) throw io_error("truncated voxel grid: " + path.string());
    for (std::size_t i = 0; i < n; ++i)
        grid.occupancy[i] = (packed[i / 8] >> (i % 8)) & 1u;
    return grid;
}

}  // namespace recon3d
