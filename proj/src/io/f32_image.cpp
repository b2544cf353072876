#include "recon3d/io/f32_image.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "recon3d/common/error.hpp"

namespace recon3d {

void save_f32_image(const ImageF& img, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write image: " + path.string());
    char header[24] = {};
    std::memcpy(header, "F32IMG\0\0", 8);
    std::uint32_t h = static_cast<std::uint32_t>(img.rows());
    std::uint32_t w = static_cast<std::uint32_t>(img.cols());
    std::memcpy(header + 8, &h, 4);
    std::memcpy(header + 12, &w, 4);
    f.write(header, 24);
    std::vector<float> row(static_cast<std::size_t>(img.cols()));
    for (Eigen::Index i = 0; i < img.rows(); ++i) {
        for (Eigen::Index j = 0; j < img.cols(); ++j) row[static_cast<std::size_t>(j)] = img(i, j);
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!f) throw io_error("short write: " + path.string());
}

ImageF load_f32_image(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot read image: " + path.string());
    char header[24];
    f.read(header, 24);
    if (!f || std::memcmp(header, "F32IMG\0\0", 8) != 0)
        throw io_error("bad image magic: " + path.string());
    std::uint32_t h = 0, w = 0;
    std::memcpy(&h, header + 8, 4);
    std::memcpy(&w, header + 12, 4);
    if (h == 0 || w == 0 || h > 1u << 16 || w > 1u << 16)
        throw io_error("implausible image dimensions: " + path.string());
    ImageF img(h, w);
    std::vector<float> row(w);
    for (std::uint32_t i = 0; i < h; ++i) {
        f.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!f) throw io_error("truncated image: " + path.string());
        for (std::uint32_t j = 0; j < w; ++j) img(i, j) = row[j];
    }
    return img;
}

}  // namespace recon3d
