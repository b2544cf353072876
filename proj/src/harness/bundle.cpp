#include "recon3d/harness/bundle.hpp"

#include "recon3d/nn/checkpoint.hpp"

namespace recon3d {

namespace {
std::vector<int> id_range(int begin, int end) {
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(end - begin));
    for (int i = begin; i < end; ++i) ids.push_back(i);
    return ids;
}
}  // namespace

ModelBundle::ModelBundle(const ExperimentConfig& cfg) : cfg_(cfg) {
    cfg_.link();
    sched_ = cfg_.schedule();

    Rng vis_rng(derive_seed(cfg_.seed, {0x115ULL}));
    int begin = params_.size();
    vision_ = std::make_unique<VisionEncoder<float>>(params_, vis_rng, cfg_.vision);
    groups_["vision"] = id_range(begin, params_.size());

    Rng nfe_rng(derive_seed(cfg_.seed, {0x2feULL}));
    begin = params_.size();
    ef_ = std::make_unique<FrameEncoder<float>>(params_, nfe_rng, cfg_.frame_encoder);
    fa_ = std::make_unique<Aggregator<float>>(params_, nfe_rng, cfg_.fa);
    ag::Mat<float> tau0(1, 1);
    tau0(0, 0) = static_cast<float>(std::log(cfg_.tau_init));
    log_tau_ = params_.add("nfe.log_tau", tau0);
    groups_["nfe"] = id_range(begin, params_.size());

    Rng fbdm_rng(derive_seed(cfg_.seed, {0x3bdULL}));
    begin = params_.size();
    fbdm_ = std::make_unique<Denoiser<float>>(params_, fbdm_rng, cfg_.fbdm);
    groups_["fbdm"] = id_range(begin, params_.size());

    Rng vq_rng(derive_seed(cfg_.seed, {0x400ULL}));
    begin = params_.size();
    vq_ = std::make_unique<VqModel<float>>(params_, vq_rng, cfg_.vq);
    groups_["vq"] = id_range(begin, params_.size());

    Rng ar_rng(derive_seed(cfg_.seed, {0x5adULL}));
    begin = params_.size();
    ar_ = std::make_unique<ArDecoder<float>>(params_, ar_rng, cfg_.ar);
    groups_["ar"] = id_range(begin, params_.size());
}

const std::vector<int>& ModelBundle::group_ids(const std::string& name) const {
    auto it = groups_.find(name);
    if (it == groups_.end()) throw argument_error("unknown parameter group: " + name);
    return it->second;
}

std::vector<std::string> ModelBundle::group_names() const {
    std::vector<std::string> names;
    for (const auto& [k, v] : groups_) names.push_back(k);
    return names;
}

std::string ModelBundle::group_hash(const std::string& name) const {
    return nn::group_hash(params_, group_ids(name));
}

std::size_t ModelBundle::group_param_count(const std::string& name) const {
    std::size_t n = 0;
    for (int id : group_ids(name)) n += static_cast<std::size_t>(params_.value(id).size());
    return n;
}

void ModelBundle::save_checkpoints(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, ids] : groups_)
        nn::save_checkpoint(params_, ids, dir / (name + ".ckpt"));
}

void ModelBundle::load_checkpoints(const std::filesystem::path& dir) {
    for (auto& [name, ids] : groups_)
        nn::load_checkpoint(params_, ids, dir / (name + ".ckpt"));
}

LatentFeature<float> ModelBundle::compute_cf(const std::vector<ImageF>& frames) const {
    auto tokens = ef_->encode_frames(frames);
    return make_latent(fa_->forward_eval(tokens), "c_f");
}

ReconOutput reconstruct_trial(const ModelBundle& bundle, const FmriTrial& trial,
                              std::uint64_t seed) {
    auto stage = [](const std::string& name, auto&& fn) -> decltype(fn()) {
        try {
            return fn();
        } catch (const error& e) {
            throw error("stage=" + name + ": " + e.what());
        }
    };

    ReconOutput out;
    std::vector<ImageF> selected = stage("select_frames", [&] {
        std::vector<ImageF> frames;
        for (int idx :
             select_frames(static_cast<int>(trial.frames.size()), FrameSelectMode::Eval, seed))
            frames.push_back(trial.frames[static_cast<std::size_t>(idx)]);
        return frames;
    });
    out.cf = stage("nfe", [&] { return bundle.compute_cf(selected); });
    out.cv_hat = stage("fbdm", [&] {
        if (bundle.cfg().no_diffusion) {
            LatentFeature<float> f = out.cf;
            f.role = "c_v_hat";
            return f;
        }
        return make_latent(ddpm_sample(bundle.denoiser(), bundle.schedule(), out.cf.tokens,
                                       derive_seed(seed, {0xddULL})),
                           "c_v_hat");
    });
    out.codes = stage("ar_sample", [&] {
        CodeSequence seq;
        seq.grid = bundle.cfg().vq.latent_grid();
        seq.codes = bundle.ar().sample(out.cv_hat.tokens, out.cf.pooled,
                                       bundle.cfg().eval.temperature, bundle.cfg().eval.top_k,
                                       derive_seed(seed, {0xa2ULL}));
        return seq;
    });
    out.voxel = stage("vq_decode", [&] {
        VoxelGrid grid = bundle.vq().decode(out.codes);
        if (grid.empty()) {
            // keep downstream metrics defined for degenerate samples
            int c = grid.resolution / 2;
            grid.set(c, c, c, 1);
        }
        return grid;
    });
    out.mesh = stage("extract_mesh", [&] { return extract_mesh(out.voxel); });
    return out;
}

}  // namespace recon3d
