#include "recon3d/synth/forward_model.hpp"

#include <algorithm>
#include <cmath>

#include "recon3d/common/error.hpp"
#include "recon3d/common/hash.hpp"
#include "recon3d/common/rng.hpp"

namespace recon3d {

namespace {

void gaussian_smooth_inplace(ImageF& img, float sigma) {
    if (sigma <= 0.0f) return;
    int radius = std::max(1, static_cast<int>(std::ceil(3.0f * sigma)));
    Eigen::VectorXf kernel(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i)
        kernel(i + radius) = std::exp(-0.5f * (i * i) / (sigma * sigma));
    kernel /= kernel.sum();

    const int H = static_cast<int>(img.rows()), W = static_cast<int>(img.cols());
    ImageF tmp(H, W);
    for (int i = 0; i < H; ++i) {  // horizontal pass, clamped borders
        for (int j = 0; j < W; ++j) {
            float acc = 0.0f;
            for (int k = -radius; k <= radius; ++k) {
                int jj = std::min(std::max(j + k, 0), W - 1);
                acc += kernel(k + radius) * img(i, jj);
            }
            tmp(i, j) = acc;
        }
    }
    for (int j = 0; j < W; ++j) {  // vertical pass
        for (int i = 0; i < H; ++i) {
            float acc = 0.0f;
            for (int k = -radius; k <= radius; ++k) {
                int ii = std::min(std::max(i + k, 0), H - 1);
                acc += kernel(k + radius) * tmp(ii, j);
            }
            img(i, j) = acc;
        }
    }
}

void zscore_inplace(ImageF& img) {
    double mean = img.cast<double>().mean();
    double var = (img.cast<double>().array() - mean).square().mean();
    double sd = std::sqrt(std::max(var, 1e-24));
    img = ((img.cast<double>().array() - mean) / sd).cast<float>();
}

}  // namespace

BrainForwardModel BrainForwardModel::make(const std::string& subject_id, std::uint64_t seed,
                                          float noise_std, int signal_size, int feature_grid) {
    BrainForwardModel m;
    m.subject_id_ = subject_id;
    m.seed_ = seed;
    m.noise_std_ = noise_std;
    m.signal_size_ = signal_size;
    m.feature_grid_ = feature_grid;

    Rng rng(derive_seed(seed, {0x50bULL, 0x1ec7ULL}));
    const int S = signal_size;
    // subject-specific circular visual ROI
    double cx = rng.uniform(0.30, 0.48) * S;
    double cy = rng.uniform(0.38, 0.62) * S;
    double radius = rng.uniform(0.17, 0.24) * S;
    m.roi_mask_ = ImageF::Zero(S, S);
    std::vector<int> roi_pixels;
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j) {
            double dy = i - cy, dx = j - cx;
            if (dx * dx + dy * dy <= radius * radius) {
                m.roi_mask_(i, j) = 1.0f;
                roi_pixels.push_back(i * S + j);
            }
        }
    if (roi_pixels.empty()) throw validation_error("forward model produced an empty ROI");

    m.smoothing_sigma_ = static_cast<float>(rng.uniform(1.5, 2.5));
    m.lag_frames_ = 2;

    const int F = m.feature_dim();
    m.projection_ = Eigen::MatrixXf::Zero(S * S, F);
    for (int f = 0; f < F; ++f)
        for (int p : roi_pixels) m.projection_(p, f) = static_cast<float>(rng.normal());
    return m;
}

double BrainForwardModel::roi_weight_fraction() const {
    const int S = signal_size_;
    double inside = 0.0, total = 0.0;
    for (int p = 0; p < S * S; ++p) {
        double w2 = projection_.row(p).cast<double>().squaredNorm();
        total += w2;
        if (roi_mask_(p / S, p % S) > 0.5f) inside += w2;
    }
    return total > 0 ? inside / total : 0.0;
}

Eigen::VectorXf BrainForwardModel::view_feature(const ImageF& view) const {
    const int G = feature_grid_;
    const int H = static_cast<int>(view.rows()), W = static_cast<int>(view.cols());
    Eigen::VectorXf feat(G * G);
    for (int gi = 0; gi < G; ++gi) {
        int r0 = gi * H / G, r1 = (gi + 1) * H / G;
        for (int gj = 0; gj < G; ++gj) {
            int c0 = gj * W / G, c1 = (gj + 1) * W / G;
            feat(gi * G + gj) = view.block(r0, c0, r1 - r0, c1 - c0).mean();
        }
    }
    return feat;
}

FmriTrial BrainForwardModel::simulate(const ViewSet& views, std::uint64_t trial_seed) const {
    if (views.images.empty()) throw argument_error("simulate_fmri: view set is empty");
    const int k = static_cast<int>(views.images.size());
    const int S = signal_size_;

    std::vector<Eigen::VectorXf> feats;
    feats.reserve(views.images.size());
    for (const auto& v : views.images) feats.push_back(view_feature(v));

    FmriTrial trial;
    trial.subject_id = subject_id_;
    trial.frames.reserve(kFramesPerTrial);

    const int window = std::max(1, k / 5);
    for (int f = 0; f < kFramesPerTrial; ++f) {
        // lag-shifted rolling pool over the rotation
        int start = static_cast<int>(
            std::floor(static_cast<double>(f - lag_frames_) * k / kFramesPerTrial));
        Eigen::VectorXf pooled = Eigen::VectorXf::Zero(feature_dim());
        for (int w = 0; w < window; ++w) {
            int idx = ((start + w) % k + k) % k;
            pooled += feats[static_cast<std::size_t>(idx)];
        }
        pooled /= static_cast<float>(window);

        Eigen::VectorXf raw = projection_ * pooled;
        double sd = std::sqrt(
            std::max(1e-24, (raw.cast<double>().array() - raw.cast<double>().mean()).square().mean()));
        raw /= static_cast<float>(sd);

        ImageF frame(S, S);
        Rng drift(derive_seed(trial_seed, {0xd21f7ULL, static_cast<std::uint64_t>(f), seed_}));
        Rng noise(derive_seed(trial_seed, {0x4015eULL, static_cast<std::uint64_t>(f), seed_}));
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j) {
                float v = raw(i * S + j) + drift_std_ * static_cast<float>(drift.normal());
                if (noise_std_ > 0.0f) v += noise_std_ * static_cast<float>(noise.normal());
                frame(i, j) = v;
            }
        gaussian_smooth_inplace(frame, smoothing_sigma_);
        zscore_inplace(frame);
        trial.frames.push_back(std::move(frame));
    }
    return trial;
}

FmriTrial simulate_fmri(const ViewSet& views, const BrainForwardModel& subject,
                        std::uint64_t trial_seed) {
    return subject.simulate(views, trial_seed);
}

std::vector<int> select_frames(int n_frames, FrameSelectMode mode, std::uint64_t seed) {
    if (n_frames != kFramesPerTrial)
        throw shape_error("select_frames: expected " + std::to_string(kFramesPerTrial) +
                          " frames, got " + std::to_string(n_frames));
    if (mode == FrameSelectMode::Eval) return {2, 3, 4, 5, 6, 7};  // middle six
    std::vector<int> all(static_cast<std::size_t>(n_frames));
    for (int i = 0; i < n_frames; ++i) all[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    for (int i = 0; i < 6; ++i) {
        int j = static_cast<int>(rng.uniform_int(i, n_frames - 1));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    std::vector<int> out(all.begin(), all.begin() + 6);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace recon3d
