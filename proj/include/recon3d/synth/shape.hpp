#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recon3d/synth/voxel.hpp"

namespace recon3d {

/// Solid primitive in normalized [-1,1]^3 coordinates. `extent` holds
/// half-sizes (box) or radii (sphere uses extent.x; ellipsoid all three;
/// cylinder radii extent along the two lateral axes, half-height along
/// `axis`). `yaw_deg` rotates about the vertical (z) axis.
struct Primitive {
    enum class Kind { Box, Sphere, Cylinder, Ellipsoid };
    Kind kind = Kind::Box;
    double center[3] = {0, 0, 0};
    double extent[3] = {0.5, 0.5, 0.5};
    double yaw_deg = 0.0;
    int axis = 2;  // cylinder axis: 0=x, 1=y, 2=z

    bool contains(double x, double y, double z) const;
    /// Conservative world-space bounding radius around `center`.
    double bounding_radius() const;
};

struct ShapeSpec {
    int class_id = 0;
    std::vector<Primitive> primitives;
    std::uint64_t seed = 0;

    std::string describe() const;
};

/// Voxelizes a spec: a cell is occupied iff its center lies inside any
/// primitive. Throws invalid_spec_error on an empty primitive list, a
/// primitive that cannot touch the unit cube, or an all-empty result.
VoxelGrid generate_shape(const ShapeSpec& spec, int resolution = 32);

/// Procedural object family for a category; deterministic in
/// (class_id, object_seed). Categories >= category_family_count() reuse
/// families with independent jitter streams.
ShapeSpec make_object_spec(int class_id, std::uint64_t object_seed);

int category_family_count();
std::string category_name(int class_id);

}  // namespace recon3d
