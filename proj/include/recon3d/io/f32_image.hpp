#pragma once

#include <Eigen/Dense>
#include <filesystem>

namespace recon3d {

using ImageF = Eigen::MatrixXf;  // rows = height, cols = width

// Raw little-endian float32 image with a 24-byte header:
//   bytes 0..7   magic "F32IMG\0\0"
//   bytes 8..11  u32 height
//   bytes 12..15 u32 width
//   bytes 16..23 u64 reserved (zero)
// Pixels follow row-major (scanline) order.

void save_f32_image(const ImageF& img, const std::filesystem::path& path);
ImageF load_f32_image(const std::filesystem::path& path);

}  // namespace recon3d
