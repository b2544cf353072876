#pragma once

#include "recon3d/common/error.hpp"
#include "recon3d/io/f32_image.hpp"

namespace recon3d {

/// Frozen-feature perceptual distance: per encoder layer, unit-normalise
/// each token vector and take the mean squared difference; average over
/// layers. Zero for identical images and symmetric by construction.
/// `Encoder` must provide layer_activations(image) -> vector of token maps.
template <typename Encoder>
double perceptual_distance(const ImageF& a, const ImageF& b, const Encoder& enc) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw shape_error("perceptual_distance: image dimensions differ");
    auto acts_a = enc.layer_activations(a);
    auto acts_b = enc.layer_activations(b);
    double total = 0;
    for (std::size_t l = 0; l < acts_a.size(); ++l) {
        const auto& xa = acts_a[l];
        const auto& xb = acts_b[l];
        double layer = 0;
        for (Eigen::Index i = 0; i < xa.rows(); ++i) {
            Eigen::VectorXd ra = xa.row(i).template cast<double>();
            Eigen::VectorXd rb = xb.row(i).template cast<double>();
            double na = ra.norm(), nb = rb.norm();
            if (na > 0) ra /= na;
            if (nb > 0) rb /= nb;
            layer += (ra - rb).squaredNorm();
        }
        total += layer / static_cast<double>(xa.rows() * xa.cols());
    }
    return total / static_cast<double>(acts_a.size());
}

}  // namespace recon3d
