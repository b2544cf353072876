#include "recon3d/synth/render.hpp"

#include <cmath>
#include <limits>

#include "recon3d/common/error.hpp"

namespace recon3d {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfExtent = 1.7320508075688772;  // sqrt(3): frames the whole unit cube
}  // namespace

double cos_deg(double deg) {
    double m = std::fmod(deg, 360.0);
    if (m < 0) m += 360.0;
    if (m == 0.0) return 1.0;
    if (m == 90.0) return 0.0;
    if (m == 180.0) return -1.0;
    if (m == 270.0) return 0.0;
    return std::cos(m * kPi / 180.0);
}

double sin_deg(double deg) {
    double m = std::fmod(deg, 360.0);
    if (m < 0) m += 360.0;
    if (m == 0.0) return 0.0;
    if (m == 90.0) return 1.0;
    if (m == 180.0) return 0.0;
    if (m == 270.0) return -1.0;
    return std::sin(m * kPi / 180.0);
}

ImageF render_view(const VoxelGrid& grid, double azimuth_deg, double pitch_deg, int image_size) {
    const int R = grid.resolution;
    const double ca = cos_deg(azimuth_deg), sa = sin_deg(azimuth_deg);
    const double ce = cos_deg(pitch_deg), se = sin_deg(pitch_deg);
    // view direction (camera toward origin), screen basis
    const double d[3] = {-ce * ca, -ce * sa, -se};
    const double right[3] = {-sa, ca, 0.0};
    const double up[3] = {-se * ca, -se * sa, ce};  // right x d

    ImageF img = ImageF::Zero(image_size, image_size);
    const double cell = 2.0 / R;
    const double inf = std::numeric_limits<double>::infinity();

    for (int row = 0; row < image_size; ++row) {
        double v = kHalfExtent - (row + 0.5) * (2.0 * kHalfExtent / image_size);
        for (int col = 0; col < image_size; ++col) {
            double u = (col + 0.5) * (2.0 * kHalfExtent / image_size) - kHalfExtent;
            double o[3];
            for (int a = 0; a < 3; ++a) o[a] = u * right[a] + v * up[a];

            // slab intersection with the unit cube
            double tmin = -inf, tmax = inf;
            bool miss = false;
            for (int a = 0; a < 3 && !miss; ++a) {
                if (std::abs(d[a]) < 1e-12) {
                    if (o[a] < -1.0 || o[a] > 1.0) miss = true;
                } else {
                    double t1 = (-1.0 - o[a]) / d[a];
                    double t2 = (1.0 - o[a]) / d[a];
                    if (t1 > t2) std::swap(t1, t2);
                    tmin = std::max(tmin, t1);
                    tmax = std::min(tmax, t2);
                }
            }
            if (miss || tmin > tmax) continue;

            // Amanatides-Woo traversal from the entry point
            double t = tmin;
            int ix[3];
            for (int a = 0; a < 3; ++a) {
                double p = o[a] + t * d[a];
                int i = static_cast<int>(std::floor((p + 1.0) / cell));
                ix[a] = std::min(std::max(i, 0), R - 1);
            }
            double t_next[3];
            double t_delta[3];
            int step[3];
            for (int a = 0; a < 3; ++a) {
                if (std::abs(d[a]) < 1e-12) {
                    step[a] = 0;
                    t_next[a] = inf;
                    t_delta[a] = inf;
                } else if (d[a] > 0) {
                    step[a] = 1;
                    double boundary = -1.0 + (ix[a] + 1) * cell;
                    t_next[a] = (boundary - o[a]) / d[a];
                    t_delta[a] = cell / d[a];
                } else {
                    step[a] = -1;
                    double boundary = -1.0 + ix[a] * cell;
                    t_next[a] = (boundary - o[a]) / d[a];
                    t_delta[a] = -cell / d[a];
                }
            }

            double t_enter = tmin;
            while (true) {
                if (grid.at(ix[0], ix[1], ix[2])) {
                    double depth = (t_enter + kHalfExtent) / (2.0 * kHalfExtent);
                    img(row, col) = static_cast<float>(1.0 - 0.6 * std::min(std::max(depth, 0.0), 1.0));
                    break;
                }
                int a = 0;
                if (t_next[1] < t_next[a]) a = 1;
                if (t_next[2] < t_next[a]) a = 2;
                if (t_next[a] > tmax) break;
                t_enter = t_next[a];
                ix[a] += step[a];
                if (ix[a] < 0 || ix[a] >= R) break;
                t_next[a] += t_delta[a];
            }
        }
    }
    return img;
}

ViewSet render_views(const VoxelGrid& grid, int k, double pitch_deg, int image_size) {
    if (k < 1) throw argument_error("render_views: k must be >= 1");
    if (grid.empty()) throw empty_shape_error("render_views: grid has no occupied cells");
    ViewSet out;
    out.pitch_deg = pitch_deg;
    out.images.reserve(static_cast<std::size_t>(k));
    out.azimuths_deg.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        double az = i * (360.0 / k);
        out.azimuths_deg.push_back(az);
        out.images.push_back(render_view(grid, az, pitch_deg, image_size));
    }
    return out;
}

}  // namespace recon3d
