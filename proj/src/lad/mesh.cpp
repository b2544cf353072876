#include "recon3d/lad/mesh.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "recon3d/common/error.hpp"

namespace recon3d {

namespace {

// Face corner offsets (lattice units), counter-clockwise seen from outside.
struct FaceSpec {
    int dx, dy, dz;
    int corners[4][3];
};

constexpr FaceSpec kFaces[6] = {
    {+1, 0, 0, {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {1, 0, 1}}},
    {-1, 0, 0, {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}}},
    {0, +1, 0, {{0, 1, 0}, {0, 1, 1}, {1, 1, 1}, {1, 1, 0}}},
    {0, -1, 0, {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}}},
    {0, 0, +1, {{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}},
    {0, 0, -1, {{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}}},
};

}  // namespace

Mesh extract_mesh(const VoxelGrid& grid) {
    if (grid.empty()) throw empty_shape_error("extract_mesh: grid has no occupied cells");
    const int R = grid.resolution;
    Mesh mesh;
    std::unordered_map<std::int64_t, int> corner_index;

    auto vertex_id = [&](int x, int y, int z) {
        std::int64_t key =
            (static_cast<std::int64_t>(z) * (R + 1) + y) * (R + 1) + x;
        auto it = corner_index.find(key);
        if (it != corner_index.end()) return it->second;
        int idx = static_cast<int>(mesh.vertices.size());
        float step = 2.0f / static_cast<float>(R);
        mesh.vertices.push_back({-1.0f + x * step, -1.0f + y * step, -1.0f + z * step});
        corner_index.emplace(key, idx);
        return idx;
    };

    for (int z = 0; z < R; ++z)
        for (int y = 0; y < R; ++y)
            for (int x = 0; x < R; ++x) {
                if (!grid.at(x, y, z)) continue;
                for (const auto& f : kFaces) {
                    int nx = x + f.dx, ny = y + f.dy, nz = z + f.dz;
                    bool open = !grid.in_bounds(nx, ny, nz) || !grid.at(nx, ny, nz);
                    if (!open) continue;
                    int v[4];
                    for (int c = 0; c < 4; ++c)
                        v[c] = vertex_id(x + f.corners[c][0], y + f.corners[c][1],
                                         z + f.corners[c][2]);
                    mesh.triangles.push_back({v[0], v[1], v[2]});
                    mesh.triangles.push_back({v[0], v[2], v[3]});
                }
            }
    return mesh;
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write mesh: " + path.string());
    std::ostringstream os;
    os.precision(7);
    for (const auto& v : mesh.vertices) os << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << "\n";
    for (const auto& t : mesh.triangles)
        os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << "\n";
    f << os.str();
    if (!f) throw io_error("short write: " + path.string());
}

Mesh load_obj(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot read mesh: " + path.string());
    Mesh mesh;
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("v ", 0) == 0) {
            std::istringstream is(line.substr(2));
            std::array<float, 3> v{};
            is >> v[0] >> v[1] >> v[2];
            if (is.fail()) throw io_error("malformed vertex record: " + line);
            mesh.vertices.push_back(v);
        } else if (line.rfind("f ", 0) == 0) {
            std::istringstream is(line.substr(2));
            std::array<int, 3> t{};
            is >> t[0] >> t[1] >> t[2];
            if (is.fail()) throw io_error("malformed face record: " + line);
            for (auto& i : t) --i;
            mesh.triangles.push_back(t);
        }
    }
    return mesh;
}

}  // namespace recon3d
