#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "recon3d/common/error.hpp"
#include "recon3d/common/rng.hpp"
#include "recon3d/eval/pointcloud.hpp"

namespace recon3d {

/// Symmetric PSD square root via eigendecomposition; small negative
/// eigenvalues are clamped, larger ones raise numerical_error.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double tol = 1e-6) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw numerical_error("psd_sqrt: eigendecomposition failed");
    Eigen::VectorXd ev = eig.eigenvalues();
    double scale = std::max(1.0, std::abs(ev.maxCoeff()));
    if (ev.minCoeff() < -tol * scale)
        throw numerical_error("psd_sqrt: matrix is not positive semi-definite within tolerance");
    Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Squared Fréchet distance between two Gaussians:
/// |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa Sb)^(1/2)), evaluated through the
/// symmetrised product sqrt(Sa)^T Sb sqrt(Sa).
inline double frechet_gaussian(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& cov_a,
                               const Eigen::VectorXd& mu_b, const Eigen::MatrixXd& cov_b) {
    if (mu_a.size() != mu_b.size() || cov_a.rows() != cov_b.rows())
        throw shape_error("frechet_gaussian: dimension mismatch");
    Eigen::MatrixXd s = psd_sqrt(cov_a);
    Eigen::MatrixXd inner = s * cov_b * s;
    Eigen::MatrixXd sym = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw numerical_error("frechet_gaussian: eigendecomposition failed");
    Eigen::VectorXd ev = eig.eigenvalues();
    double scale = std::max(1.0, std::abs(ev.maxCoeff()));
    if (ev.minCoeff() < -1e-6 * scale)
        throw numerical_error("frechet_gaussian: product matrix not PSD within tolerance");
    double tr_sqrt = ev.cwiseMax(0.0).cwiseSqrt().sum();
    double d = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
    return std::max(0.0, d);
}

struct GaussianStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Unbiased sample statistics over feature rows.
inline GaussianStats fit_gaussian(const Eigen::MatrixXd& features) {
    if (features.rows() < 2) throw argument_error("fit_gaussian: need at least two samples");
    GaussianStats s;
    s.mean = features.colwise().mean();
    Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
    s.cov = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
    return s;
}

/// Fréchet point-cloud distance between two feature sets (rows = samples),
/// reported with the x 1e-1 adjustment.
inline double fpd(const Eigen::MatrixXd& features_a, const Eigen::MatrixXd& features_b) {
    if (features_a.cols() != features_b.cols()) throw shape_error("fpd: feature width mismatch");
    if (features_a.rows() < 2 || features_b.rows() < 2)
        throw argument_error("fpd: need at least two samples per set");
    GaussianStats a = fit_gaussian(features_a), b = fit_gaussian(features_b);
    return 0.1 * frechet_gaussian(a.mean, a.cov, b.mean, b.cov);
}

/// Fixed seeded point-feature extractor: per-point 3-layer MLP (tanh)
/// followed by coordinate-wise max pooling. Deterministic in the seed and
/// never trained, which keeps FPD reproducible.
class PointFeatureNet {
public:
    explicit PointFeatureNet(int feature_dim = 64, int hidden = 64, std::uint64_t seed = 2024) {
        Rng rng(derive_seed(seed, {0xfeafULL}));
        auto init = [&](Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c) {
            m.resize(r, c);
            double s = std::sqrt(2.0 / static_cast<double>(r));
            for (Eigen::Index j = 0; j < c; ++j)
                for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal(0.0, s);
        };
        init(w1_, 3, hidden);
        init(w2_, hidden, hidden);
        init(w3_, hidden, feature_dim);
    }

    Eigen::VectorXd features(const PointCloud& cloud) const {
        if (cloud.rows() == 0) throw argument_error("PointFeatureNet: empty cloud");
        Eigen::MatrixXd h = (cloud * w1_).array().tanh();
        h = (h * w2_).array().tanh();
        Eigen::MatrixXd out = h * w3_;
        return out.colwise().maxCoeff();
    }

private:
    Eigen::MatrixXd w1_, w2_, w3_;
};

}  // namespace recon3d
