#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "recon3d/io/f32_image.hpp"
#include "recon3d/synth/render.hpp"

namespace recon3d {

constexpr int kFramesPerTrial = 10;

/// One simulated acquisition: 10 z-scored signal images plus identity tags.
struct FmriTrial {
    std::vector<ImageF> frames;
    std::string subject_id;
    std::string object_id;
    int class_id = -1;
    std::string split;
    int session = 0;
};

/// Synthetic per-subject response model. A pooled, lag-shifted window of
/// view features is linearly projected into the subject's visual ROI; a
/// low-amplitude subject drift and optional measurement noise are added,
/// the image is smoothed and finally z-scored per frame.
class BrainForwardModel {
public:
    static BrainForwardModel make(const std::string& subject_id, std::uint64_t seed,
                                  float noise_std, int signal_size = 256, int feature_grid = 16);

    const std::string& subject_id() const { return subject_id_; }
    std::uint64_t seed() const { return seed_; }
    float noise_std() const { return noise_std_; }
    int signal_size() const { return signal_size_; }
    int feature_dim() const { return feature_grid_ * feature_grid_; }
    int lag_frames() const { return lag_frames_; }
    const ImageF& roi_mask() const { return roi_mask_; }

    /// Fraction of squared projection weight falling inside the ROI.
    double roi_weight_fraction() const;

    /// Pooled 16x16 mean-downsampled feature of one rendered view.
    Eigen::VectorXf view_feature(const ImageF& view) const;

    /// Deterministic in (views, model, trial_seed).
    FmriTrial simulate(const ViewSet& views, std::uint64_t trial_seed) const;

private:
    std::string subject_id_;
    std::uint64_t seed_ = 0;
    int signal_size_ = 256;
    int feature_grid_ = 16;
    int lag_frames_ = 2;
    float noise_std_ = 0.0f;
    float drift_std_ = 0.05f;
    float smoothing_sigma_ = 2.0f;
    ImageF roi_mask_;
    Eigen::MatrixXf projection_;  // (signal^2) x feature_dim, zero outside ROI
};

/// Convenience wrapper matching the pipeline vocabulary.
FmriTrial simulate_fmri(const ViewSet& views, const BrainForwardModel& subject,
                        std::uint64_t trial_seed);

/// Frame selection. Train mode samples 6 distinct indices uniformly without
/// replacement (ascending); eval mode always returns {2,3,4,5,6,7}.
enum class FrameSelectMode { Train, Eval };
std::vector<int> select_frames(int n_frames, FrameSelectMode mode, std::uint64_t seed);

}  // namespace recon3d
