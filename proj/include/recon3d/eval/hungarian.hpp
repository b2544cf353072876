#pragma once

#include <Eigen/Dense>
#include <vector>

namespace recon3d {

/// Minimum-cost perfect matching on a square cost matrix (shortest
/// augmenting path / Jonker-Volgenant potentials, O(n^3)).
/// Returns the column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace recon3d
