#pragma once

#include <Eigen/Dense>
#include <vector>

#include "recon3d/common/error.hpp"
#include "recon3d/common/rng.hpp"

namespace recon3d {

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double na = a.norm(), nb = b.norm();
    if (na <= 0 || nb <= 0) return 0.0;
    return a.dot(b) / (na * nb);
}

/// N-way top-K retrieval accuracy: over `trials` draws of n-1 distractor
/// rows from the pool, the trial succeeds when cosine(recon, gt) ranks in
/// the top k among the n candidates. Exact cosine ties resolve in favour of
/// the ground truth.
inline double nway_topk(const Eigen::VectorXd& recon_feature, const Eigen::VectorXd& gt_feature,
                        const Eigen::MatrixXd& distractor_pool, int n, int k, int trials,
                        std::uint64_t seed) {
    if (n < 2 || k < 1) throw argument_error("nway_topk: need n >= 2 and k >= 1");
    if (trials < 1) throw argument_error("nway_topk: need at least one trial");
    if (recon_feature.size() != gt_feature.size() ||
        (distractor_pool.rows() > 0 && distractor_pool.cols() != recon_feature.size()))
        throw shape_error("nway_topk: feature width mismatch");
    const int pool = static_cast<int>(distractor_pool.rows());
    if (pool < n - 1) throw argument_error("nway_topk: distractor pool smaller than n-1");

    const double gt_cos = cosine(recon_feature, gt_feature);
    std::vector<double> pool_cos(static_cast<std::size_t>(pool));
    for (int i = 0; i < pool; ++i)
        pool_cos[static_cast<std::size_t>(i)] = cosine(recon_feature, distractor_pool.row(i));

    Rng rng(seed);
    std::vector<int> idx(static_cast<std::size_t>(pool));
    int successes = 0;
    for (int t = 0; t < trials; ++t) {
        for (int i = 0; i < pool; ++i) idx[static_cast<std::size_t>(i)] = i;
        int beat = 0;  // distractors strictly better than the ground truth
        for (int d = 0; d < n - 1; ++d) {
            int j = static_cast<int>(rng.uniform_int(d, pool - 1));
            std::swap(idx[static_cast<std::size_t>(d)], idx[static_cast<std::size_t>(j)]);
            if (pool_cos[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])] > gt_cos)
                ++beat;
        }
        if (beat < k) ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(trials);
}

}  // namespace recon3d
