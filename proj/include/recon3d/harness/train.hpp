#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "recon3d/harness/bundle.hpp"
#include "recon3d/synth/dataset.hpp"

namespace recon3d {

/// In-memory training data: every core-train trial plus per-object geometry.
struct DataCache {
    DatasetManifest manifest;

    struct Object {
        std::string id;
        int class_id = 0;
        VoxelGrid voxel;
        std::vector<ImageF> views;
        std::vector<ag::Mat<float>> view_embeds;  // filled after vision training
        CodeSequence codes;                       // filled after VQ training
    };
    std::vector<Object> train_objects;
    std::map<std::string, std::size_t> object_index;

    struct Trial {
        TrialRef ref;
        std::vector<ImageF> frames;
    };
    std::vector<Trial> train_trials;

    static DataCache load(const DatasetManifest& manifest);

    /// Encodes every training view with the (frozen) vision encoder.
    void refresh_view_embeddings(const ModelBundle& bundle);
    /// Encodes every training shape to its code sequence.
    void refresh_codes(const ModelBundle& bundle);

    /// c_v latent for an object: n views sampled without replacement,
    /// embeddings tiled to L_c tokens (cached embeddings required).
    LatentFeature<float> object_cv(std::size_t object_idx, int n, int lc,
                                   std::uint64_t seed) const;
};

using LogFn = std::function<void(const std::string&)>;

struct StageResult {
    std::vector<double> epoch_losses;
    double wall_seconds = 0;
};

StageResult train_vision(ModelBundle& bundle, DataCache& cache, const LogFn& log);
StageResult train_stage1(ModelBundle& bundle, DataCache& cache, const LogFn& log);
StageResult train_vq(ModelBundle& bundle, DataCache& cache, const LogFn& log);
StageResult train_ar_base(ModelBundle& bundle, DataCache& cache, const LogFn& log);
StageResult train_stage2(ModelBundle& bundle, DataCache& cache, const LogFn& log);

/// Mean voxel IoU of VQ round trips over the training shapes.
double vq_roundtrip_iou(const ModelBundle& bundle, const DataCache& cache);

/// Mean held-out NLL of the adapted decoder over the given trials.
double heldout_nll(const ModelBundle& bundle, const DataCache& cache,
                   const std::vector<const TrialRef*>& trials);

}  // namespace recon3d
