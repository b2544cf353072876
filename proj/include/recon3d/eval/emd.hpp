#pragma once

#include <cmath>
#include <limits>

#include "recon3d/common/error.hpp"
#include "recon3d/eval/hungarian.hpp"
#include "recon3d/eval/pointcloud.hpp"

namespace recon3d {

/// Earth mover's distance between equal-size clouds: minimum-cost perfect
/// matching under Euclidean cost, reported as mean matched distance x 1e2.
/// The exact solver is limited to N <= 1024.
inline double emd_exact(const PointCloud& p, const PointCloud& q) {
    if (p.rows() != q.rows()) throw argument_error("emd_exact: cloud sizes differ");
    if (p.rows() == 0) throw argument_error("emd_exact: empty point cloud");
    if (p.rows() > 1024) throw argument_error("emd_exact: exact solver requires N <= 1024");
    const int n = static_cast<int>(p.rows());
    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = (p.row(i) - q.row(j)).norm();
    std::vector<int> match = solve_assignment(cost);
    double total = 0;
    for (int i = 0; i < n; ++i) total += cost(i, match[static_cast<std::size_t>(i)]);
    return 100.0 * total / static_cast<double>(n);
}

/// Entropic-regularised approximation: log-domain Sinkhorn with epsilon
/// scaling, uniform marginals 1/N. The transport plan is
/// P_ij = exp((f_i + g_j - C_ij)/eps) with total mass 1, so <P,C> is the
/// mean matched distance analogue; reported x 1e2.
inline double emd_sinkhorn(const PointCloud& p, const PointCloud& q, double epsilon = 0.01,
                           int max_iters = 500, double marginal_tol = 1e-7) {
    if (p.rows() != q.rows()) throw argument_error("emd_sinkhorn: cloud sizes differ");
    if (p.rows() == 0) throw argument_error("emd_sinkhorn: empty point cloud");
    if (epsilon <= 0) throw argument_error("emd_sinkhorn: epsilon must be positive");
    const int n = static_cast<int>(p.rows());
    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = (p.row(i) - q.row(j)).norm();

    const double log_a = -std::log(static_cast<double>(n));  // log marginal weight
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(n);

    // warm-start at a loose regulariser and anneal down to `epsilon`
    std::vector<double> stages;
    for (double e = std::max(epsilon, 0.05); e > epsilon * 1.5; e /= 3.0) stages.push_back(e);
    stages.push_back(epsilon);

    Eigen::VectorXd lse(n);
    auto lse_rows = [&](const Eigen::MatrixXd& m) {
        for (int i = 0; i < n; ++i) {
            double mx = m.row(i).maxCoeff();
            lse(i) = mx + std::log((m.row(i).array() - mx).exp().sum());
        }
    };
    auto row_marginal_violation = [&](double eps) {
        double worst = 0;
        for (int i = 0; i < n; ++i) {
            double row_sum = 0;
            for (int j = 0; j < n; ++j) row_sum += std::exp((f(i) + g(j) - cost(i, j)) / eps);
            worst = std::max(worst, std::abs(row_sum - 1.0 / n));
        }
        return worst;
    };

    int iters_left = max_iters;
    Eigen::MatrixXd work(n, n);
    for (std::size_t s = 0; s < stages.size() && iters_left > 0; ++s) {
        const double eps = stages[s];
        const bool final_stage = (s + 1 == stages.size());
        int stage_budget = final_stage ? iters_left : std::min(iters_left, 40);
        for (int it = 0; it < stage_budget; ++it) {
            --iters_left;
            work = ((-cost).rowwise() + g.transpose()) / eps;
            lse_rows(work);
            f = (eps * (log_a - lse.array())).matrix();
            work = (((-cost).colwise() + f).transpose()) / eps;
            lse_rows(work);
            g = (eps * (log_a - lse.array())).matrix();
            if (final_stage && row_marginal_violation(eps) < marginal_tol) break;
        }
    }

    const double eps = stages.back();
    double total = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            total += std::exp((f(i) + g(j) - cost(i, j)) / eps) * cost(i, j);
    return 100.0 * total;
}

}  // namespace recon3d
