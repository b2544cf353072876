#pragma once

#include <cmath>

#include "recon3d/ag/graph.hpp"
#include "recon3d/common/rng.hpp"

namespace recon3d::nn {

template <typename Scalar>
ag::Mat<Scalar> normal_init(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev = 0.02) {
    ag::Mat<Scalar> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(rng.normal(0.0, stddev));
    return m;
}

/// Xavier/Glorot uniform for linear maps.
template <typename Scalar>
ag::Mat<Scalar> xavier_init(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    ag::Mat<Scalar> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    return m;
}

template <typename Scalar>
ag::Mat<Scalar> zeros(Eigen::Index rows, Eigen::Index cols) {
    return ag::Mat<Scalar>::Zero(rows, cols);
}

template <typename Scalar>
ag::Mat<Scalar> ones(Eigen::Index rows, Eigen::Index cols) {
    return ag::Mat<Scalar>::Ones(rows, cols);
}

}  // namespace recon3d::nn
