#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "recon3d/common/error.hpp"

namespace recon3d {

/// Structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// C1=(0.01)^2, C2=(0.03)^2 for unit dynamic range; mean over valid window
/// positions. Inputs must share dimensions and live in [0,1].
template <typename Derived1, typename Derived2>
double ssim(const Eigen::MatrixBase<Derived1>& a_in, const Eigen::MatrixBase<Derived2>& b_in) {
    using Md = Eigen::MatrixXd;
    if (a_in.rows() != b_in.rows() || a_in.cols() != b_in.cols())
        throw shape_error("ssim: image dimensions differ");
    const int H = static_cast<int>(a_in.rows()), W = static_cast<int>(a_in.cols());
    constexpr int kWin = 11, kRad = 5;
    if (H < kWin || W < kWin) throw shape_error("ssim: images smaller than the 11x11 window");

    Md a = a_in.template cast<double>();
    Md b = b_in.template cast<double>();

    Eigen::VectorXd kernel(kWin);
    const double sigma = 1.5;
    for (int i = 0; i < kWin; ++i)
        kernel(i) = std::exp(-0.5 * (i - kRad) * (i - kRad) / (sigma * sigma));
    kernel /= kernel.sum();

    auto blur_valid = [&](const Md& x) {
        Md tmp(H, W - 2 * kRad);  // horizontal valid pass
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W - 2 * kRad; ++j) {
                double acc = 0;
                for (int k = 0; k < kWin; ++k) acc += kernel(k) * x(i, j + k);
                tmp(i, j) = acc;
            }
        Md out(H - 2 * kRad, W - 2 * kRad);  // vertical valid pass
        for (int j = 0; j < W - 2 * kRad; ++j)
            for (int i = 0; i < H - 2 * kRad; ++i) {
                double acc = 0;
                for (int k = 0; k < kWin; ++k) acc += kernel(k) * tmp(i + k, j);
                out(i, j) = acc;
            }
        return out;
    };

    Md mu_a = blur_valid(a), mu_b = blur_valid(b);
    Md e_aa = blur_valid(Md(a.cwiseProduct(a)));
    Md e_bb = blur_valid(Md(b.cwiseProduct(b)));
    Md e_ab = blur_valid(Md(a.cwiseProduct(b)));

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0;
    for (int i = 0; i < mu_a.rows(); ++i)
        for (int j = 0; j < mu_a.cols(); ++j) {
            double ma = mu_a(i, j), mb = mu_b(i, j);
            double va = e_aa(i, j) - ma * ma;
            double vb = e_bb(i, j) - mb * mb;
            double cov = e_ab(i, j) - ma * mb;
            acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    return acc / static_cast<double>(mu_a.size());
}

}  // namespace recon3d
