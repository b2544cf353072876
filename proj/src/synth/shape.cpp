#include "recon3d/synth/shape.hpp"

#include <cmath>
#include <sstream>

#include "recon3d/common/rng.hpp"

namespace recon3d {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

bool Primitive::contains(double x, double y, double z) const {
    // into primitive frame: translate, then undo yaw
    double px = x - center[0], py = y - center[1], pz = z - center[2];
    if (yaw_deg != 0.0) {
        double a = -yaw_deg * kPi / 180.0;
        double c = std::cos(a), s = std::sin(a);
        double rx = c * px - s * py, ry = s * px + c * py;
        px = rx;
        py = ry;
    }
    switch (kind) {
        case Kind::Box:
            return std::abs(px) <= extent[0] && std::abs(py) <= extent[1] &&
                   std::abs(pz) <= extent[2];
        case Kind::Sphere: {
            double r = extent[0];
            return px * px + py * py + pz * pz <= r * r;
        }
        case Kind::Ellipsoid: {
            double u = px / extent[0], v = py / extent[1], w = pz / extent[2];
            return u * u + v * v + w * w <= 1.0;
        }
        case Kind::Cylinder: {
            double lat1, lat2, ax;
            if (axis == 0) {
                ax = px;
                lat1 = py / extent[1];
                lat2 = pz / extent[2];
            } else if (axis == 1) {
                ax = py;
                lat1 = px / extent[0];
                lat2 = pz / extent[2];
            } else {
                ax = pz;
                lat1 = px / extent[0];
                lat2 = py / extent[1];
            }
            double half = extent[axis];
            return lat1 * lat1 + lat2 * lat2 <= 1.0 && std::abs(ax) <= half;
        }
    }
    return false;
}

double Primitive::bounding_radius() const {
    return std::sqrt(extent[0] * extent[0] + extent[1] * extent[1] + extent[2] * extent[2]);
}

std::string ShapeSpec::describe() const {
    std::ostringstream os;
    os << "class=" << class_id << " seed=" << seed << " primitives=" << primitives.size();
    return os.str();
}

VoxelGrid generate_shape(const ShapeSpec& spec, int resolution) {
    if (spec.primitives.empty()) throw invalid_spec_error("shape spec has no primitives");
    if (resolution < 2) throw invalid_spec_error("voxel resolution must be at least 2");
    for (const auto& p : spec.primitives) {
        double r = p.bounding_radius();
        bool touches = true;
        for (int a = 0; a < 3; ++a)
            touches = touches && (p.center[a] - r <= 1.0) && (p.center[a] + r >= -1.0);
        if (!touches) throw invalid_spec_error("primitive lies fully outside the unit cube");
    }

    VoxelGrid grid(resolution);
    for (int z = 0; z < resolution; ++z) {
        for (int y = 0; y < resolution; ++y) {
            for (int x = 0; x < resolution; ++x) {
                double cx, cy, cz;
                grid.cell_center(x, y, z, cx, cy, cz);
                for (const auto& p : spec.primitives) {
                    if (p.contains(cx, cy, cz)) {
                        grid.set(x, y, z, 1);
                        break;
                    }
                }
            }
        }
    }
    if (grid.empty())
        throw invalid_spec_error("spec voxelizes to an empty grid at resolution " +
                                 std::to_string(resolution));
    grid.provenance = spec.describe();
    return grid;
}

namespace {

Primitive box(double cx, double cy, double cz, double ex, double ey, double ez,
              double yaw = 0.0) {
    Primitive p;
    p.kind = Primitive::Kind::Box;
    p.center[0] = cx;
    p.center[1] = cy;
    p.center[2] = cz;
    p.extent[0] = ex;
    p.extent[1] = ey;
    p.extent[2] = ez;
    p.yaw_deg = yaw;
    return p;
}

Primitive sphere(double cx, double cy, double cz, double r) {
    Primitive p;
    p.kind = Primitive::Kind::Sphere;
    p.center[0] = cx;
    p.center[1] = cy;
    p.center[2] = cz;
    p.extent[0] = p.extent[1] = p.extent[2] = r;
    return p;
}

Primitive ellipsoid(double cx, double cy, double cz, double rx, double ry, double rz) {
    Primitive p;
    p.kind = Primitive::Kind::Ellipsoid;
    p.center[0] = cx;
    p.center[1] = cy;
    p.center[2] = cz;
    p.extent[0] = rx;
    p.extent[1] = ry;
    p.extent[2] = rz;
    return p;
}

Primitive cylinder(int axis, double cx, double cy, double cz, double radius, double half_len) {
    Primitive p;
    p.kind = Primitive::Kind::Cylinder;
    p.axis = axis;
    p.center[0] = cx;
    p.center[1] = cy;
    p.center[2] = cz;
    p.extent[0] = p.extent[1] = p.extent[2] = radius;
    p.extent[axis] = half_len;
    return p;
}

const char* kCategoryNames[] = {
    "chair", "table", "lamp", "airplane", "car",      "bottle",  "mug",     "sofa",    "bed",
    "shelf", "screen", "rocket", "dumbbell", "ring", "pyramid", "cross", "mushroom",
};
constexpr int kFamilies = static_cast<int>(sizeof(kCategoryNames) / sizeof(kCategoryNames[0]));

}  // namespace

int category_family_count() { return kFamilies; }

std::string category_name(int class_id) {
    if (class_id < kFamilies) return kCategoryNames[class_id];
    return "class" + std::to_string(class_id);
}

ShapeSpec make_object_spec(int class_id, std::uint64_t object_seed) {
    ShapeSpec spec;
    spec.class_id = class_id;
    spec.seed = object_seed;
    Rng rng(derive_seed(object_seed, {static_cast<std::uint64_t>(class_id), 0xabcdefULL}));
    auto j = [&](double lo, double hi) { return rng.uniform(lo, hi); };
    double s = j(0.85, 1.12);  // overall scale jitter
    double yaw = j(-20.0, 20.0);
    auto& prims = spec.primitives;

    switch (class_id % kFamilies) {
        case 0: {  // chair: seat, back, four legs
            double seat_h = j(-0.15, -0.05);
            prims.push_back(box(0, 0, seat_h, 0.42 * s, 0.42 * s, 0.06, yaw));
            prims.push_back(box(0, -0.36 * s, seat_h + 0.45, 0.40 * s, 0.07, 0.45, yaw));
            double lx = 0.32 * s, lz = (seat_h + 1.0) / 2.0;
            for (int dx = -1; dx <= 1; dx += 2)
                for (int dy = -1; dy <= 1; dy += 2)
                    prims.push_back(
                        box(dx * lx, dy * lx, seat_h - lz, 0.07, 0.07, lz, yaw));
            break;
        }
        case 1: {  // table: slab on four legs
            double top = j(0.05, 0.2);
            prims.push_back(box(0, 0, top, 0.62 * s, 0.42 * s, 0.05, yaw));
            double lx = 0.5 * s, ly = 0.3 * s, lz = (top + 0.92) / 2.0;
            for (int dx = -1; dx <= 1; dx += 2)
                for (int dy = -1; dy <= 1; dy += 2)
                    prims.push_back(box(dx * lx, dy * ly, top - lz, 0.07, 0.07, lz, yaw));
            break;
        }
        case 2: {  // lamp: base, stem, shade
            prims.push_back(cylinder(2, 0, 0, -0.85, 0.34 * s, 0.08));
            prims.push_back(cylinder(2, 0, 0, -0.1, 0.08, 0.7));
            prims.push_back(ellipsoid(0, 0, 0.62, 0.34 * s, 0.34 * s, 0.26 * s));
            break;
        }
        case 3: {  // airplane: fuselage, wings, tail
            prims.push_back(ellipsoid(0, 0, 0, 0.8 * s, 0.16, 0.16));
            prims.push_back(box(0.05, 0, 0, 0.16, 0.85 * s, 0.05, yaw * 0.2));
            prims.push_back(box(-0.62 * s, 0, 0.2, 0.1, 0.3 * s, 0.2));
            break;
        }
        case 4: {  // car: body, cabin, wheels
            prims.push_back(box(0, 0, -0.35, 0.75 * s, 0.32 * s, 0.16, yaw * 0.3));
            prims.push_back(box(-0.05, 0, -0.05, 0.38 * s, 0.27 * s, 0.15, yaw * 0.3));
            for (int dx = -1; dx <= 1; dx += 2)
                for (int dy = -1; dy <= 1; dy += 2)
                    prims.push_back(cylinder(1, dx * 0.45 * s, dy * 0.3 * s, -0.62, 0.16, 0.07));
            break;
        }
        case 5: {  // bottle: body, neck, cap
            prims.push_back(cylinder(2, 0, 0, -0.3, 0.3 * s, 0.55));
            prims.push_back(cylinder(2, 0, 0, 0.45, 0.12 * s, 0.25));
            prims.push_back(sphere(0, 0, 0.74, 0.14 * s));
            break;
        }
        case 6: {  // mug: body, handle
            prims.push_back(cylinder(2, -0.1, 0, -0.2, 0.42 * s, 0.5));
            prims.push_back(box(0.45 * s, 0, -0.2, 0.12, 0.08, 0.32));
            break;
        }
        case 7: {  // sofa: base, backrest, armrests
            prims.push_back(box(0, 0, -0.5, 0.8 * s, 0.42 * s, 0.22, yaw * 0.3));
            prims.push_back(box(0, -0.32 * s, -0.05, 0.8 * s, 0.12, 0.4, yaw * 0.3));
            for (int dx = -1; dx <= 1; dx += 2)
                prims.push_back(box(dx * 0.72 * s, 0, -0.2, 0.1, 0.4 * s, 0.34, yaw * 0.3));
            break;
        }
        case 8: {  // bed: mattress, headboard, feet
            prims.push_back(box(0, 0, -0.58, 0.55 * s, 0.85 * s, 0.14, yaw * 0.2));
            prims.push_back(box(0, -0.8 * s, -0.25, 0.55 * s, 0.07, 0.42, yaw * 0.2));
            break;
        }
        case 9: {  // shelf: two side walls and horizontal boards
            prims.push_back(box(-0.5 * s, 0, 0, 0.06, 0.3 * s, 0.85));
            prims.push_back(box(0.5 * s, 0, 0, 0.06, 0.3 * s, 0.85));
            int boards = 3 + static_cast<int>(rng.uniform_int(0, 1));
            for (int i = 0; i < boards; ++i) {
                double z = -0.75 + 1.5 * i / (boards - 1.0);
                prims.push_back(box(0, 0, z, 0.52 * s, 0.3 * s, 0.05));
            }
            break;
        }
        case 10: {  // screen: thin panel on a stand
            prims.push_back(box(0, 0, 0.22, 0.72 * s, 0.07, 0.5 * s, yaw));
            prims.push_back(cylinder(2, 0, 0, -0.5, 0.08, 0.24));
            prims.push_back(box(0, 0, -0.8, 0.3 * s, 0.22 * s, 0.05, yaw));
            break;
        }
        case 11: {  // rocket: body, nose, fins
            prims.push_back(cylinder(2, 0, 0, -0.15, 0.22 * s, 0.6));
            prims.push_back(ellipsoid(0, 0, 0.62, 0.22 * s, 0.22 * s, 0.3));
            for (int i = 0; i < 3; ++i) {
                double a = i * 120.0 + yaw;
                double ar = a * kPi / 180.0;
                prims.push_back(box(0.3 * std::cos(ar), 0.3 * std::sin(ar), -0.68, 0.26, 0.07,
                                    0.22, a));
            }
            break;
        }
        case 12: {  // dumbbell: bar with two end weights
            prims.push_back(cylinder(0, 0, 0, 0, 0.1, 0.62 * s));
            prims.push_back(sphere(-0.62 * s, 0, 0, 0.3 * s));
            prims.push_back(sphere(0.62 * s, 0, 0, 0.3 * s));
            break;
        }
        case 13: {  // ring of spheres
            int n = 8;
            double rad = 0.6 * s;
            for (int i = 0; i < n; ++i) {
                double a = 2.0 * kPi * i / n;
                prims.push_back(sphere(rad * std::cos(a), rad * std::sin(a), 0, 0.24));
            }
            break;
        }
        case 14: {  // pyramid: stacked shrinking slabs
            int tiers = 4;
            for (int i = 0; i < tiers; ++i) {
                double w = (0.8 - 0.18 * i) * s;
                prims.push_back(box(0, 0, -0.7 + 0.38 * i, w, w, 0.18, yaw));
            }
            break;
        }
        case 15: {  // cross: two perpendicular bars
            prims.push_back(box(0, 0, 0, 0.8 * s, 0.16, 0.16, yaw));
            prims.push_back(box(0, 0, 0, 0.16, 0.8 * s, 0.16, yaw));
            prims.push_back(box(0, 0, 0, 0.14, 0.14, 0.8 * s));
            break;
        }
        default: {  // mushroom: stem plus wide cap
            prims.push_back(cylinder(2, 0, 0, -0.4, 0.18 * s, 0.45));
            prims.push_back(ellipsoid(0, 0, 0.25, 0.62 * s, 0.62 * s, 0.3));
            break;
        }
    }
    return spec;
}

}  // namespace recon3d
