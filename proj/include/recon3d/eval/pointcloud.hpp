#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "recon3d/common/error.hpp"
#include "recon3d/common/rng.hpp"
#include "recon3d/lad/mesh.hpp"

namespace recon3d {

using PointCloud = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Area-weighted uniform surface sampling.
inline PointCloud sample_points(const Mesh& mesh, int n, std::uint64_t seed) {
    if (n < 1) throw argument_error("sample_points: need at least one point");
    if (mesh.triangles.empty()) throw empty_shape_error("sample_points: mesh has no triangles");

    std::vector<double> cumulative(mesh.triangles.size());
    double total = 0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        Eigen::Vector3d p0, p1, p2;
        for (int c = 0; c < 3; ++c) {
            p0(c) = mesh.vertices[static_cast<std::size_t>(tri[0])][c];
            p1(c) = mesh.vertices[static_cast<std::size_t>(tri[1])][c];
            p2(c) = mesh.vertices[static_cast<std::size_t>(tri[2])][c];
        }
        total += 0.5 * (p1 - p0).cross(p2 - p0).norm();
        cumulative[t] = total;
    }
    if (total <= 0) throw empty_shape_error("sample_points: zero surface area");

    Rng rng(seed);
    PointCloud out(n, 3);
    for (int i = 0; i < n; ++i) {
        double r = rng.uniform() * total;
        std::size_t t = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
        if (t >= mesh.triangles.size()) t = mesh.triangles.size() - 1;
        const auto& tri = mesh.triangles[t];
        double r1 = std::sqrt(rng.uniform()), r2 = rng.uniform();
        double w0 = 1.0 - r1, w1 = r1 * (1.0 - r2), w2 = r1 * r2;
        for (int c = 0; c < 3; ++c)
            out(i, c) = w0 * mesh.vertices[static_cast<std::size_t>(tri[0])][c] +
                        w1 * mesh.vertices[static_cast<std::size_t>(tri[1])][c] +
                        w2 * mesh.vertices[static_cast<std::size_t>(tri[2])][c];
    }
    return out;
}

}  // namespace recon3d
