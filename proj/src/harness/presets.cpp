#include "recon3d/harness/presets.hpp"

#include <sstream>

#include "recon3d/common/hash.hpp"

namespace recon3d {

ExperimentConfig ExperimentConfig::desk() {
    ExperimentConfig c;
    c.data = DatasetConfig{};
    c.frame_encoder = PatchTransformerConfig{256, 32, 128, 2, 4, 2.0};
    c.fa = AggregatorConfig{kSelectedFrames, 128, 16, 128, 2, 4, 2.0};
    c.vision = VisionEncoderConfig{};
    c.vision.vit = PatchTransformerConfig{224, 32, 128, 2, 4, 2.0};
    c.vision.out_dim = 128;
    c.fbdm = DenoiserConfig{128, 3, 4, 16, 128, 2.0};
    c.timesteps = 100;
    c.vq = VqConfig{32, 4, 256, 64, 64, 0.25};
    c.ar = ArConfig{};
    c.ar.vocab = 256;
    c.ar.width = 128;
    c.ar.depth = 4;
    c.ar.heads = 4;
    c.ar.lc = 16;
    c.ar.dc = 128;
    c.ar.code_len = 512;
    c.ar.adapter_period = 4;
    c.link();
    return c;
}

ExperimentConfig ExperimentConfig::paper_scale() {
    ExperimentConfig c;
    c.data = DatasetConfig::paper_scale();
    // neuro-fusion encoder: patch 16, dim 1024, depth 24, heads 16,
    // mlp ratio 0.99, 6 signal frames, 4 image frames
    c.frame_encoder = PatchTransformerConfig{256, 16, 1024, 24, 16, 0.99};
    c.fa = AggregatorConfig{kSelectedFrames, 1024, 256, 512, 2, 16, 0.99};
    c.vision.vit = PatchTransformerConfig{224, 32, 512, 12, 8, 0.99};
    c.vision.out_dim = 512;
    c.n_view_frames = 4;
    // feature bridge: dim 512, depth 6, heads 8, 100 timesteps
    c.fbdm = DenoiserConfig{512, 6, 8, 256, 512, 0.99};
    c.timesteps = 100;
    // latent adapted decoder: codebook 8192 x 512, width 3072, depth 32,
    // heads 16; position table capped at the published sequence length
    c.vq = VqConfig{64, 8, 8192, 512, 256, 0.25};
    c.ar.vocab = 8192;
    c.ar.width = 3072;
    c.ar.depth = 32;
    c.ar.heads = 16;
    c.ar.lc = 256;
    c.ar.dc = 512;
    c.ar.code_len = 512;
    c.ar.adapter_period = 4;
    c.ar.mlp_ratio = 0.99;
    c.ar.max_seq = 1027;
    c.link();
    return c;
}

void ExperimentConfig::link() {
    frame_encoder.image_size = data.frame_size;
    vision.vit.image_size = data.view_size;
    fa.frames = kSelectedFrames;
    fa.enc_dim = frame_encoder.dim;
    vision.classes = data.categories;
    fa.dc = vision.out_dim;
    fbdm.lc = fa.lc;
    fbdm.dc = fa.dc;
    ar.lc = fa.lc;
    ar.dc = fa.dc;
    ar.vocab = vq.codebook_size;
    vq.resolution = data.voxel_resolution;
    ar.code_len = vq.cells();
    frame_encoder.validate();
    vision.vit.validate();
    vq.validate();
    ar.validate();
    if (n_view_frames < 1) throw config_error("n_view_frames must be positive");
    if (fa.lc % n_view_frames != 0)
        throw config_error("L_c must be a multiple of n_view_frames so the pooled "
                           "vector equals the mean of the sampled embeddings");
}

DiffusionSchedule ExperimentConfig::schedule() const {
    if (beta_min > 0.0 && beta_max > 0.0)
        return DiffusionSchedule::make(timesteps, beta_min, beta_max);
    return DiffusionSchedule::make_rescaled(timesteps);
}

std::string ExperimentConfig::to_config_text() const {
    std::ostringstream os;
    os << "[data]\n";
    os << "root = " << data.root << "\n";
    os << "categories = " << data.categories << "\n";
    os << "apac_categories = " << data.apac_categories << "\n";
    os << "train_per_category = " << data.train_per_category << "\n";
    os << "test_per_category = " << data.test_per_category << "\n";
    os << "apac_per_category = " << data.apac_per_category << "\n";
    os << "views_per_object = " << data.views_per_object << "\n";
    os << "view_size = " << data.view_size << "\n";
    os << "frame_size = " << data.frame_size << "\n";
    os << "voxel_resolution = " << data.voxel_resolution << "\n";
    os << "test_sessions = " << data.test_sessions << "\n";
    os << "core_noise_std = " << data.core_noise_std << "\n";
    os << "ood_noise_std = " << data.ood_noise_std << "\n";
    os << "seed = " << data.seed << "\n";
    os << "\n[nfe]\n";
    os << "patch = " << frame_encoder.patch << "\n";
    os << "dim = " << frame_encoder.dim << "\n";
    os << "depth = " << frame_encoder.depth << "\n";
    os << "heads = " << frame_encoder.heads << "\n";
    os << "mlp_ratio = " << frame_encoder.mlp_ratio << "\n";
    os << "fa_blocks = " << fa.blocks << "\n";
    os << "lc = " << fa.lc << "\n";
    os << "dc = " << fa.dc << "\n";
    os << "n_view_frames = " << n_view_frames << "\n";
    os << "tau_init = " << tau_init << "\n";
    os << "vision_patch = " << vision.vit.patch << "\n";
    os << "vision_dim = " << vision.vit.dim << "\n";
    os << "vision_depth = " << vision.vit.depth << "\n";
    os << "vision_heads = " << vision.vit.heads << "\n";
    os << "\n[fbdm]\n";
    os << "width = " << fbdm.width << "\n";
    os << "depth = " << fbdm.depth << "\n";
    os << "heads = " << fbdm.heads << "\n";
    os << "timesteps = " << timesteps << "\n";
    os << "beta_min = " << beta_min << "\n";
    os << "beta_max = " << beta_max << "\n";
    os << "\n[lad]\n";
    os << "codebook_size = " << vq.codebook_size << "\n";
    os << "code_dim = " << vq.code_dim << "\n";
    os << "vq_cell = " << vq.cell << "\n";
    os << "vq_hidden = " << vq.hidden << "\n";
    os << "ar_width = " << ar.width << "\n";
    os << "ar_depth = " << ar.depth << "\n";
    os << "ar_heads = " << ar.heads << "\n";
    os << "adapter_period = " << ar.adapter_period << "\n";
    os << "ar_max_seq = " << ar.max_seq << "\n";
    os << "\n[train]\n";
    os << "vision_epochs = " << train.vision.epochs << "\n";
    os << "vision_lr = " << train.vision.lr << "\n";
    os << "vision_batch = " << train.vision.batch << "\n";
    os << "stage1_epochs = " << train.stage1.epochs << "\n";
    os << "stage1_lr = " << train.stage1.lr << "\n";
    os << "stage1_batch = " << train.stage1.batch << "\n";
    os << "vq_epochs = " << train.vq.epochs << "\n";
    os << "vq_lr = " << train.vq.lr << "\n";
    os << "vq_batch = " << train.vq.batch << "\n";
    os << "ar_epochs = " << train.ar_base.epochs << "\n";
    os << "ar_lr = " << train.ar_base.lr << "\n";
    os << "ar_batch = " << train.ar_base.batch << "\n";
    os << "stage2_epochs = " << train.stage2.epochs << "\n";
    os << "stage2_lr = " << train.stage2.lr << "\n";
    os << "stage2_batch = " << train.stage2.batch << "\n";
    os << "clip_norm = " << train.clip_norm << "\n";
    os << "contrastive_weight = " << train.contrastive_weight << "\n";
    os << "\n[eval]\n";
    os << "temperature = " << eval.temperature << "\n";
    os << "top_k = " << eval.top_k << "\n";
    os << "points = " << eval.points << "\n";
    os << "nway_trials = " << eval.nway_trials << "\n";
    os << "\n[run]\n";
    os << "seed = " << seed << "\n";
    os << "no_diffusion = " << (no_diffusion ? "true" : "false") << "\n";
    os << "no_contrastive = " << (no_contrastive ? "true" : "false") << "\n";
    os << "out_dir = " << out_dir << "\n";
    return os.str();
}

std::string ExperimentConfig::config_hash() const {
    std::string text = to_config_text();
    return fnv64_hex(text.data(), text.size());
}

void ExperimentConfig::apply(const ConfigFile& f) {
    data.root = f.get("data", "root", data.root);
    data.categories = static_cast<int>(f.get_int("data", "categories", data.categories));
    data.apac_categories =
        static_cast<int>(f.get_int("data", "apac_categories", data.apac_categories));
    data.train_per_category =
        static_cast<int>(f.get_int("data", "train_per_category", data.train_per_category));
    data.test_per_category =
        static_cast<int>(f.get_int("data", "test_per_category", data.test_per_category));
    data.apac_per_category =
        static_cast<int>(f.get_int("data", "apac_per_category", data.apac_per_category));
    data.views_per_object =
        static_cast<int>(f.get_int("data", "views_per_object", data.views_per_object));
    data.view_size = static_cast<int>(f.get_int("data", "view_size", data.view_size));
    data.frame_size = static_cast<int>(f.get_int("data", "frame_size", data.frame_size));
    data.voxel_resolution =
        static_cast<int>(f.get_int("data", "voxel_resolution", data.voxel_resolution));
    data.test_sessions = static_cast<int>(f.get_int("data", "test_sessions", data.test_sessions));
    data.core_noise_std =
        static_cast<float>(f.get_real("data", "core_noise_std", data.core_noise_std));
    data.ood_noise_std =
        static_cast<float>(f.get_real("data", "ood_noise_std", data.ood_noise_std));
    data.seed = static_cast<std::uint64_t>(f.get_int("data", "seed", static_cast<long>(data.seed)));

    frame_encoder.patch = static_cast<int>(f.get_int("nfe", "patch", frame_encoder.patch));
    frame_encoder.dim = static_cast<int>(f.get_int("nfe", "dim", frame_encoder.dim));
    frame_encoder.depth = static_cast<int>(f.get_int("nfe", "depth", frame_encoder.depth));
    frame_encoder.heads = static_cast<int>(f.get_int("nfe", "heads", frame_encoder.heads));
    frame_encoder.mlp_ratio = f.get_real("nfe", "mlp_ratio", frame_encoder.mlp_ratio);
    fa.blocks = static_cast<int>(f.get_int("nfe", "fa_blocks", fa.blocks));
    fa.lc = static_cast<int>(f.get_int("nfe", "lc", fa.lc));
    vision.out_dim = static_cast<int>(f.get_int("nfe", "dc", vision.out_dim));
    n_view_frames = static_cast<int>(f.get_int("nfe", "n_view_frames", n_view_frames));
    tau_init = f.get_real("nfe", "tau_init", tau_init);
    vision.vit.patch = static_cast<int>(f.get_int("nfe", "vision_patch", vision.vit.patch));
    vision.vit.dim = static_cast<int>(f.get_int("nfe", "vision_dim", vision.vit.dim));
    vision.vit.depth = static_cast<int>(f.get_int("nfe", "vision_depth", vision.vit.depth));
    vision.vit.heads = static_cast<int>(f.get_int("nfe", "vision_heads", vision.vit.heads));

    fbdm.width = static_cast<int>(f.get_int("fbdm", "width", fbdm.width));
    fbdm.depth = static_cast<int>(f.get_int("fbdm", "depth", fbdm.depth));
    fbdm.heads = static_cast<int>(f.get_int("fbdm", "heads", fbdm.heads));
    timesteps = static_cast<int>(f.get_int("fbdm", "timesteps", timesteps));
    beta_min = f.get_real("fbdm", "beta_min", beta_min);
    beta_max = f.get_real("fbdm", "beta_max", beta_max);

    vq.codebook_size = static_cast<int>(f.get_int("lad", "codebook_size", vq.codebook_size));
    vq.code_dim = static_cast<int>(f.get_int("lad", "code_dim", vq.code_dim));
    vq.cell = static_cast<int>(f.get_int("lad", "vq_cell", vq.cell));
    vq.hidden = static_cast<int>(f.get_int("lad", "vq_hidden", vq.hidden));
    ar.width = static_cast<int>(f.get_int("lad", "ar_width", ar.width));
    ar.depth = static_cast<int>(f.get_int("lad", "ar_depth", ar.depth));
    ar.heads = static_cast<int>(f.get_int("lad", "ar_heads", ar.heads));
    ar.adapter_period = static_cast<int>(f.get_int("lad", "adapter_period", ar.adapter_period));
    ar.max_seq = static_cast<int>(f.get_int("lad", "ar_max_seq", ar.max_seq));

    train.vision.epochs = static_cast<int>(f.get_int("train", "vision_epochs", train.vision.epochs));
    train.vision.lr = f.get_real("train", "vision_lr", train.vision.lr);
    train.vision.batch = static_cast<int>(f.get_int("train", "vision_batch", train.vision.batch));
    train.stage1.epochs = static_cast<int>(f.get_int("train", "stage1_epochs", train.stage1.epochs));
    train.stage1.lr = f.get_real("train", "stage1_lr", train.stage1.lr);
    train.stage1.batch = static_cast<int>(f.get_int("train", "stage1_batch", train.stage1.batch));
    train.vq.epochs = static_cast<int>(f.get_int("train", "vq_epochs", train.vq.epochs));
    train.vq.lr = f.get_real("train", "vq_lr", train.vq.lr);
    train.vq.batch = static_cast<int>(f.get_int("train", "vq_batch", train.vq.batch));
    train.ar_base.epochs = static_cast<int>(f.get_int("train", "ar_epochs", train.ar_base.epochs));
    train.ar_base.lr = f.get_real("train", "ar_lr", train.ar_base.lr);
    train.ar_base.batch = static_cast<int>(f.get_int("train", "ar_batch", train.ar_base.batch));
    train.stage2.epochs = static_cast<int>(f.get_int("train", "stage2_epochs", train.stage2.epochs));
    train.stage2.lr = f.get_real("train", "stage2_lr", train.stage2.lr);
    train.stage2.batch = static_cast<int>(f.get_int("train", "stage2_batch", train.stage2.batch));
    train.clip_norm = f.get_real("train", "clip_norm", train.clip_norm);
    train.contrastive_weight =
        f.get_real("train", "contrastive_weight", train.contrastive_weight);

    eval.temperature = f.get_real("eval", "temperature", eval.temperature);
    eval.top_k = static_cast<int>(f.get_int("eval", "top_k", eval.top_k));
    eval.points = static_cast<int>(f.get_int("eval", "points", eval.points));
    eval.nway_trials = static_cast<int>(f.get_int("eval", "nway_trials", eval.nway_trials));

    seed = static_cast<std::uint64_t>(f.get_int("run", "seed", static_cast<long>(seed)));
    no_diffusion = f.get_bool("run", "no_diffusion", no_diffusion);
    no_contrastive = f.get_bool("run", "no_contrastive", no_contrastive);
    out_dir = f.get("run", "out_dir", out_dir);

    link();
}

}  // namespace recon3d
