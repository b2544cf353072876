#pragma once

#include "recon3d/common/error.hpp"
#include "recon3d/eval/pointcloud.hpp"

namespace recon3d {

/// Chamfer distance, symmetric sum of mean squared nearest-neighbour
/// distances, scaled by 1e2 (reported convention).
inline double chamfer(const PointCloud& p, const PointCloud& q) {
    if (p.rows() == 0 || q.rows() == 0) throw argument_error("chamfer: empty point cloud");
    auto one_way = [](const PointCloud& src, const PointCloud& dst) {
        double acc = 0;
        for (Eigen::Index i = 0; i < src.rows(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < dst.rows(); ++j) {
                double d = (src.row(i) - dst.row(j)).squaredNorm();
                if (d < best) best = d;
            }
            acc += best;
        }
        return acc / static_cast<double>(src.rows());
    };
    return 100.0 * (one_way(p, q) + one_way(q, p));
}

}  // namespace recon3d
