#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "recon3d/fbdm/diffusion.hpp"
#include "recon3d/harness/presets.hpp"
#include "recon3d/lad/mesh.hpp"
#include "recon3d/nfe/clip_loss.hpp"
#include "recon3d/nfe/frame_encoder.hpp"

namespace recon3d {

/// All five model groups over one shared parameter store (so one graph can
/// train any subset jointly). Checkpoints, freeze hashes and optimizer
/// masks address parameters through the per-group id lists.
class ModelBundle {
public:
    explicit ModelBundle(const ExperimentConfig& cfg);

    const ExperimentConfig& cfg() const { return cfg_; }
    ag::ParamStore<float>& params() { return params_; }
    const ag::ParamStore<float>& params() const { return params_; }

    VisionEncoder<float>& vision() { return *vision_; }
    const VisionEncoder<float>& vision() const { return *vision_; }
    FrameEncoder<float>& frame_encoder() { return *ef_; }
    const FrameEncoder<float>& frame_encoder() const { return *ef_; }
    Aggregator<float>& aggregator() { return *fa_; }
    const Aggregator<float>& aggregator() const { return *fa_; }
    Denoiser<float>& denoiser() { return *fbdm_; }
    const Denoiser<float>& denoiser() const { return *fbdm_; }
    VqModel<float>& vq() { return *vq_; }
    const VqModel<float>& vq() const { return *vq_; }
    ArDecoder<float>& ar() { return *ar_; }
    const ArDecoder<float>& ar() const { return *ar_; }

    int log_tau_id() const { return log_tau_; }
    const DiffusionSchedule& schedule() const { return sched_; }

    const std::vector<int>& group_ids(const std::string& name) const;
    std::vector<std::string> group_names() const;
    std::string group_hash(const std::string& name) const;
    std::size_t group_param_count(const std::string& name) const;

    void save_checkpoints(const std::filesystem::path& dir) const;
    void load_checkpoints(const std::filesystem::path& dir);

    /// Signal latent from six selected frames (inference path).
    LatentFeature<float> compute_cf(const std::vector<ImageF>& frames) const;

private:
    ExperimentConfig cfg_;
    ag::ParamStore<float> params_;
    std::unique_ptr<VisionEncoder<float>> vision_;
    std::unique_ptr<FrameEncoder<float>> ef_;
    std::unique_ptr<Aggregator<float>> fa_;
    std::unique_ptr<Denoiser<float>> fbdm_;
    std::unique_ptr<VqModel<float>> vq_;
    std::unique_ptr<ArDecoder<float>> ar_;
    int log_tau_ = -1;
    DiffusionSchedule sched_;
    std::map<std::string, std::vector<int>> groups_;
};

/// End-to-end reconstruction record.
struct ReconOutput {
    LatentFeature<float> cf;
    LatentFeature<float> cv_hat;
    CodeSequence codes;
    VoxelGrid voxel;
    Mesh mesh;
};

/// Psi = M(F): select the middle six frames, encode + aggregate, sample the
/// vision latent (or pass c_f through under the no-diffusion ablation),
/// decode codes autoregressively, reconstruct the voxel grid and extract a
/// mesh. Failures carry the stage name.
ReconOutput reconstruct_trial(const ModelBundle& bundle, const FmriTrial& trial,
                              std::uint64_t seed);

}  // namespace recon3d
