#pragma once

#include <Eigen/Dense>

#include "recon3d/common/error.hpp"

namespace recon3d {

template <typename S>
struct QuantizeResult {
    int index = 0;
    Eigen::Matrix<S, 1, Eigen::Dynamic> vector;
    double error = 0.0;  // squared Euclidean distance to the chosen entry
};

/// Nearest codebook entry by Euclidean distance; ties break to the lowest
/// index. The straight-through gradient contract is applied where the
/// quantizer is embedded in a graph (see VqModel).
template <typename S, typename Derived>
QuantizeResult<S> quantize(const Eigen::MatrixBase<Derived>& v,
                           const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& codebook) {
    if (codebook.rows() < 2) throw argument_error("quantize: codebook needs at least 2 entries");
    if (v.size() != codebook.cols()) throw shape_error("quantize: vector width mismatch");
    if (!v.allFinite()) throw validation_error("quantize: non-finite input");
    Eigen::Matrix<S, 1, Eigen::Dynamic> row = v;
    int best = 0;
    double best_d = (codebook.row(0) - row).squaredNorm();
    for (Eigen::Index k = 1; k < codebook.rows(); ++k) {
        double d = (codebook.row(k) - row).squaredNorm();
        if (d < best_d) {  // strict: ties keep the lowest index
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    QuantizeResult<S> r;
    r.index = best;
    r.vector = codebook.row(best);
    r.error = best_d;
    return r;
}

}  // namespace recon3d
