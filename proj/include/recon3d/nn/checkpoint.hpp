#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "recon3d/ag/graph.hpp"
#include "recon3d/common/hash.hpp"

// Checkpoint format: binary blob "R3CK0001" + little-endian entries, plus a
// sidecar "<path>.manifest" text file listing every parameter name, shape
// and FNV-1a content hash. Loading verifies names and shapes against the
// store built from the active config.

namespace recon3d::nn {

inline std::string param_hash(const ag::Mat<float>& m) {
    return fnv64_hex(m.data(), static_cast<std::size_t>(m.size()) * sizeof(float));
}

/// Hash over a parameter subset in the given order (freeze contracts).
inline std::string group_hash(const ag::ParamStore<float>& store, const std::vector<int>& ids) {
    Fnv64 h;
    for (int id : ids) {
        const auto& e = store.entry(id);
        h.update(e.name);
        h.update(e.value.data(), static_cast<std::size_t>(e.value.size()) * sizeof(float));
    }
    return h.hex();
}

inline void save_checkpoint(const ag::ParamStore<float>& store, const std::vector<int>& ids,
                            const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write checkpoint: " + path.string());
    f.write("R3CK0001", 8);
    auto w32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    w32(static_cast<std::uint32_t>(ids.size()));
    std::ostringstream manifest;
    for (int id : ids) {
        const auto& e = store.entry(id);
        w32(static_cast<std::uint32_t>(e.name.size()));
        f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        w32(static_cast<std::uint32_t>(e.value.rows()));
        w32(static_cast<std::uint32_t>(e.value.cols()));
        f.write(reinterpret_cast<const char*>(e.value.data()),
                static_cast<std::streamsize>(e.value.size()) * 4);
        manifest << e.name << ' ' << e.value.rows() << ' ' << e.value.cols() << ' '
                 << param_hash(e.value) << '\n';
    }
    if (!f) throw io_error("short write: " + path.string());
    f.close();
    std::ofstream mf(path.string() + ".manifest");
    mf << "# parameter name, rows, cols, fnv64\n" << manifest.str();
}

/// Loads a subset checkpoint into an already-constructed store; every name
/// and shape must match the target ids in order.
inline void load_checkpoint(ag::ParamStore<float>& store, const std::vector<int>& ids,
                            const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot read checkpoint: " + path.string());
    char magic[8];
    f.read(magic, 8);
    if (!f || std::string(magic, 8) != "R3CK0001")
        throw io_error("bad checkpoint magic: " + path.string());
    auto r32 = [&]() {
        std::uint32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    std::uint32_t n = r32();
    if (n != ids.size())
        throw shape_error("checkpoint entry count mismatch: " + path.string());
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint32_t name_len = r32();
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        std::uint32_t rows = r32(), cols = r32();
        auto& e = store.entry(ids[i]);
        if (e.name != name)
            throw shape_error("checkpoint parameter name mismatch: expected " + e.name + ", got " +
                              name);
        if (e.value.rows() != static_cast<Eigen::Index>(rows) ||
            e.value.cols() != static_cast<Eigen::Index>(cols))
            throw shape_error("checkpoint shape mismatch for " + name);
        f.read(reinterpret_cast<char*>(e.value.data()),
               static_cast<std::streamsize>(e.value.size()) * 4);
        if (!f) throw io_error("truncated checkpoint: " + path.string());
    }
}

}  // namespace recon3d::nn
