#pragma once

#include <string>
#include <vector>

#include "recon3d/io/f32_image.hpp"
#include "recon3d/nn/blocks.hpp"

namespace recon3d {

/// Plain patch transformer: non-overlapping patch embedding, learned
/// positions, pre-norm blocks, final layer norm. Emits one token per patch.
struct PatchTransformerConfig {
    int image_size = 256;
    int patch = 16;
    int dim = 128;
    int depth = 2;
    int heads = 4;
    double mlp_ratio = 2.0;

    int patches_per_side() const { return image_size / patch; }
    int tokens() const { return patches_per_side() * patches_per_side(); }
    int patch_dim() const { return patch * patch; }
    int mlp_hidden() const { return std::max(1, static_cast<int>(dim * mlp_ratio)); }

    void validate() const {
        if (image_size % patch != 0)
            throw config_error("patch transformer: image size must be divisible by patch size");
        if (dim % heads != 0)
            throw config_error("patch transformer: embed dim must be divisible by heads");
    }
};

template <typename S>
class PatchTransformer {
public:
    PatchTransformer(ag::ParamStore<S>& store, Rng& rng, const std::string& name,
                     const PatchTransformerConfig& cfg)
        : cfg_(cfg), ps_(&store) {
        cfg_.validate();
        proj_ = nn::Linear<S>(store, rng, name + ".patch", cfg.patch_dim(), cfg.dim);
        pos_ = store.add(name + ".pos", nn::normal_init<S>(rng, cfg.tokens(), cfg.dim, 0.02));
        for (int i = 0; i < cfg.depth; ++i)
            blocks_.emplace_back(store, rng, name + ".block" + std::to_string(i), cfg.dim,
                                 cfg.heads, cfg.mlp_hidden());
        final_ln_ = nn::LayerNorm<S>(store, name + ".final_ln", cfg.dim);
    }

    const PatchTransformerConfig& config() const { return cfg_; }

    /// (tokens x patch_dim) matrix of flattened patches.
    ag::Mat<S> patchify(const ImageF& image) const {
        if (image.rows() != cfg_.image_size || image.cols() != cfg_.image_size)
            throw shape_error("patch transformer: expected " + std::to_string(cfg_.image_size) +
                              "x" + std::to_string(cfg_.image_size) + " input");
        if (!image.allFinite()) throw validation_error("patch transformer: non-finite input");
        const int side = cfg_.patches_per_side(), p = cfg_.patch;
        ag::Mat<S> out(cfg_.tokens(), cfg_.patch_dim());
        for (int pi = 0; pi < side; ++pi)
            for (int pj = 0; pj < side; ++pj) {
                Eigen::Index row = pi * side + pj;
                for (int i = 0; i < p; ++i)
                    for (int j = 0; j < p; ++j)
                        out(row, i * p + j) = static_cast<S>(image(pi * p + i, pj * p + j));
            }
        return out;
    }

    ag::Var<S> forward_ag(ag::Graph<S>& g, const ImageF& image) const {
        ag::Var<S> tokens = proj_.forward(g, g.constant(patchify(image)));
        tokens = ag::add(g, tokens, g.param(pos_));
        for (const auto& b : blocks_) tokens = b.forward(g, tokens, false);
        return final_ln_.forward(g, tokens);
    }

    ag::Mat<S> forward_eval(const ImageF& image) const {
        ag::Mat<S> tokens = proj_.forward_eval(patchify(image)) + ps_->value(pos_);
        for (const auto& b : blocks_) tokens = b.forward_eval(tokens, false);
        return final_ln_.forward_eval(tokens);
    }

    /// Token maps after each block (used by the perceptual metric).
    std::vector<ag::Mat<S>> layer_activations(const ImageF& image) const {
        std::vector<ag::Mat<S>> acts;
        ag::Mat<S> tokens = proj_.forward_eval(patchify(image)) + ps_->value(pos_);
        for (const auto& b : blocks_) {
            tokens = b.forward_eval(tokens, false);
            acts.push_back(tokens);
        }
        return acts;
    }

private:
    PatchTransformerConfig cfg_;
    ag::ParamStore<S>* ps_;
    nn::Linear<S> proj_;
    int pos_ = -1;
    std::vector<nn::TransformerBlock<S>> blocks_;
    nn::LayerNorm<S> final_ln_;
};

}  // namespace recon3d
