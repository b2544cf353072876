#pragma once

#include <vector>

#include "recon3d/io/f32_image.hpp"
#include "recon3d/synth/voxel.hpp"

namespace recon3d {

/// Orthographic depth-shaded silhouettes around the vertical axis.
struct ViewSet {
    std::vector<ImageF> images;
    std::vector<double> azimuths_deg;
    double pitch_deg = 60.0;
};

/// Degree-argument trig that is exact at multiples of 90 degrees, so views
/// of rotation-symmetric grids are reproduced bit-for-bit.
double cos_deg(double deg);
double sin_deg(double deg);

/// Renders one orthographic view. Pitch is the camera elevation above the
/// horizontal plane; intensity encodes hit depth (near = bright), 0 is
/// background. Pixel range [0,1].
ImageF render_view(const VoxelGrid& grid, double azimuth_deg, double pitch_deg, int image_size);

/// k silhouettes at azimuth_i = i*(360/k) degrees, fixed pitch.
/// Throws empty_shape_error when the grid has no occupied cells.
ViewSet render_views(const VoxelGrid& grid, int k, double pitch_deg = 60.0, int image_size = 224);

}  // namespace recon3d
