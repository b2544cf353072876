#pragma once

#include <vector>

#include "recon3d/nfe/aggregator.hpp"
#include "recon3d/nfe/patch_transformer.hpp"

namespace recon3d {

/// Small view encoder E_v: patch transformer, mean-pooled tokens projected
/// to the latent width, plus a category head used only for its pretraining
/// as a classifier (after which the encoder is frozen).
struct VisionEncoderConfig {
    PatchTransformerConfig vit{224, 32, 128, 2, 4, 2.0};
    int out_dim = 128;  // D_c
    int classes = 13;
};

template <typename S>
class VisionEncoder {
public:
    VisionEncoder(ag::ParamStore<S>& store, Rng& rng, const VisionEncoderConfig& cfg)
        : cfg_(cfg), vit_(store, rng, "ev", cfg.vit) {
        embed_proj_ = nn::Linear<S>(store, rng, "ev.embed", cfg.vit.dim, cfg.out_dim);
        head_ = nn::Linear<S>(store, rng, "ev.head", cfg.out_dim, cfg.classes);
    }

    const VisionEncoderConfig& config() const { return cfg_; }

    ag::Var<S> embed_ag(ag::Graph<S>& g, const ImageF& image) const {
        return embed_proj_.forward(g, ag::mean_over_rows(g, vit_.forward_ag(g, image)));
    }

    ag::Var<S> class_logits_ag(ag::Graph<S>& g, const ImageF& image) const {
        return head_.forward(g, embed_ag(g, image));
    }

    /// 1 x D_c embedding, deterministic.
    ag::Mat<S> embed(const ImageF& image) const {
        return embed_proj_.forward_eval(ag::Mat<S>(vit_.forward_eval(image).colwise().mean()));
    }

    std::vector<ag::Mat<S>> layer_activations(const ImageF& image) const {
        return vit_.layer_activations(image);
    }

    /// Samples n views without replacement, encodes them and tiles the
    /// embeddings cyclically to L_c tokens. The pooled vector is the mean
    /// of the tokens, which equals the mean of the n embeddings whenever n
    /// divides L_c.
    LatentFeature<S> encode_views(const std::vector<ImageF>& views, int n, int lc,
                                  std::uint64_t seed) const {
        const int total = static_cast<int>(views.size());
        if (n < 1 || n > total)
            throw argument_error("encode_views: n must be in [1, view count]");
        std::vector<int> idx(static_cast<std::size_t>(total));
        for (int i = 0; i < total; ++i) idx[static_cast<std::size_t>(i)] = i;
        Rng rng(seed);
        for (int i = 0; i < n; ++i) {
            int j = static_cast<int>(rng.uniform_int(i, total - 1));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        std::vector<ag::Mat<S>> embeds;
        embeds.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            embeds.push_back(
                embed(views[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]));
        ag::Mat<S> tokens(lc, cfg_.out_dim);
        for (int r = 0; r < lc; ++r) tokens.row(r) = embeds[static_cast<std::size_t>(r % n)].row(0);
        return make_latent(std::move(tokens), "c_v");
    }

private:
    VisionEncoderConfig cfg_;
    PatchTransformer<S> vit_;
    nn::Linear<S> embed_proj_, head_;
};

}  // namespace recon3d
