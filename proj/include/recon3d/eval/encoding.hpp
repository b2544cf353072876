#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "recon3d/common/error.hpp"
#include "recon3d/io/f32_image.hpp"

namespace recon3d {

/// Closed-form ridge regression: W = (X^T X + lambda I)^-1 X^T Y.
inline Eigen::MatrixXd ridge_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                 double lambda) {
    if (lambda < 0) throw argument_error("ridge_fit: lambda must be non-negative");
    if (x.rows() != y.rows()) throw shape_error("ridge_fit: row count mismatch");
    if (x.rows() < 1) throw argument_error("ridge_fit: need at least one sample");
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += lambda;
    return gram.ldlt().solve(x.transpose() * y);
}

/// Per-column Pearson correlation over rows (trials). Zero-variance columns
/// yield r = 0 by convention.
inline Eigen::VectorXd pearson_map(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& actual) {
    if (pred.rows() != actual.rows() || pred.cols() != actual.cols())
        throw shape_error("pearson_map: shape mismatch");
    if (pred.rows() < 2) throw argument_error("pearson_map: need at least two trials");
    const Eigen::Index b = pred.rows(), p = pred.cols();
    Eigen::VectorXd r(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double mp = pred.col(j).mean(), ma = actual.col(j).mean();
        double sp = 0, sa = 0, cross = 0;
        for (Eigen::Index i = 0; i < b; ++i) {
            double dp = pred(i, j) - mp, da = actual(i, j) - ma;
            sp += dp * dp;
            sa += da * da;
            cross += dp * da;
        }
        r(j) = (sp <= 0 || sa <= 0) ? 0.0 : cross / std::sqrt(sp * sa);
    }
    return r;
}

/// Mean correlation inside and outside an ROI mask (flattened row-major to
/// match the pearson map layout).
inline std::pair<double, double> roi_contrast(const Eigen::VectorXd& r_map, const ImageF& roi) {
    if (r_map.size() != roi.size()) throw shape_error("roi_contrast: map/mask size mismatch");
    double in_sum = 0, out_sum = 0;
    long in_n = 0, out_n = 0;
    const int h = static_cast<int>(roi.rows()), w = static_cast<int>(roi.cols());
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            double v = r_map(static_cast<Eigen::Index>(i) * w + j);
            if (roi(i, j) > 0.5f) {
                in_sum += v;
                ++in_n;
            } else {
                out_sum += v;
                ++out_n;
            }
        }
    if (in_n == 0 || out_n == 0)
        throw argument_error("roi_contrast: mask or its complement is empty");
    return {in_sum / in_n, out_sum / out_n};
}

}  // namespace recon3d
