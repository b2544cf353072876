#pragma once

#include <string>
#include <vector>

#include "recon3d/nn/blocks.hpp"

namespace recon3d {

/// Latent feature: fixed-length token sequence plus its mean-pooled vector.
template <typename S>
struct LatentFeature {
    ag::Mat<S> tokens;  // L_c x D_c
    ag::Mat<S> pooled;  // 1 x D_c, always the mean of the token rows
    std::string role;   // "c_f" | "c_v" | "c_v_hat"
};

template <typename S>
LatentFeature<S> make_latent(ag::Mat<S> tokens, std::string role) {
    LatentFeature<S> f;
    f.pooled = tokens.colwise().mean();
    f.tokens = std::move(tokens);
    f.role = std::move(role);
    return f;
}

struct AggregatorConfig {
    int frames = 6;
    int enc_dim = 128;  // frame-encoder embed width
    int lc = 16;
    int dc = 128;
    int blocks = 2;
    int heads = 4;
    double mlp_ratio = 2.0;
};

/// Feature aggregation: one summary token per frame (mean over that frame's
/// tokens) with learned temporal positions, a small transformer over the
/// frame axis, then L_c learned queries cross-attending into the frame
/// tokens and a projection to the latent width. Order-aware by design.
template <typename S>
class Aggregator {
public:
    Aggregator(ag::ParamStore<S>& store, Rng& rng, const AggregatorConfig& cfg)
        : cfg_(cfg), ps_(&store) {
        if (cfg.enc_dim % cfg.heads != 0)
            throw config_error("aggregator: enc_dim must be divisible by heads");
        temporal_pos_ =
            store.add("fa.temporal_pos", nn::normal_init<S>(rng, cfg.frames, cfg.enc_dim, 0.02));
        for (int i = 0; i < cfg.blocks; ++i)
            blocks_.emplace_back(store, rng, "fa.block" + std::to_string(i), cfg.enc_dim,
                                 cfg.heads, static_cast<int>(cfg.enc_dim * cfg.mlp_ratio));
        queries_ = store.add("fa.queries", nn::normal_init<S>(rng, cfg.lc, cfg.enc_dim, 0.02));
        wq_ = nn::Linear<S>(store, rng, "fa.cross.q", cfg.enc_dim, cfg.enc_dim);
        wk_ = nn::Linear<S>(store, rng, "fa.cross.k", cfg.enc_dim, cfg.enc_dim);
        wv_ = nn::Linear<S>(store, rng, "fa.cross.v", cfg.enc_dim, cfg.enc_dim);
        out_proj_ = nn::Linear<S>(store, rng, "fa.out", cfg.enc_dim, cfg.dc);
    }

    const AggregatorConfig& config() const { return cfg_; }

    /// frame_tokens: `frames` matrices of shape (tokens x enc_dim).
    ag::Var<S> forward_ag(ag::Graph<S>& g, const std::vector<ag::Var<S>>& frame_tokens) const {
        if (static_cast<int>(frame_tokens.size()) != cfg_.frames)
            throw shape_error("aggregator: expected " + std::to_string(cfg_.frames) + " frames");
        std::vector<ag::Var<S>> summaries;
        summaries.reserve(frame_tokens.size());
        for (const auto& ft : frame_tokens) summaries.push_back(ag::mean_over_rows(g, ft));
        ag::Var<S> h = ag::add(g, ag::concat_rows(g, summaries), g.param(temporal_pos_));
        for (const auto& b : blocks_) h = b.forward(g, h, false);

        const int dh = cfg_.enc_dim / cfg_.heads;
        const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(dh));
        ag::Var<S> q = wq_.forward(g, g.param(queries_));
        ag::Var<S> k = wk_.forward(g, h);
        ag::Var<S> v = wv_.forward(g, h);
        std::vector<ag::Var<S>> heads_out;
        for (int hd = 0; hd < cfg_.heads; ++hd) {
            ag::Var<S> qh = ag::slice_cols(g, q, hd * dh, dh);
            ag::Var<S> kh = ag::slice_cols(g, k, hd * dh, dh);
            ag::Var<S> vh = ag::slice_cols(g, v, hd * dh, dh);
            ag::Var<S> attn = ag::softmax_rows(g, ag::scale(g, ag::matmul_nt(g, qh, kh), inv_sqrt));
            heads_out.push_back(ag::matmul(g, attn, vh));
        }
        return out_proj_.forward(g, ag::concat_cols(g, heads_out));
    }

    ag::Mat<S> forward_eval(const std::vector<ag::Mat<S>>& frame_tokens) const {
        if (static_cast<int>(frame_tokens.size()) != cfg_.frames)
            throw shape_error("aggregator: expected " + std::to_string(cfg_.frames) + " frames");
        ag::Mat<S> h(cfg_.frames, cfg_.enc_dim);
        for (int f = 0; f < cfg_.frames; ++f)
            h.row(f) = frame_tokens[static_cast<std::size_t>(f)].colwise().mean();
        h += ps_->value(temporal_pos_);
        for (const auto& b : blocks_) h = b.forward_eval(h, false);

        const int dh = cfg_.enc_dim / cfg_.heads;
        const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(dh));
        ag::Mat<S> q = wq_.forward_eval(ps_->value(queries_));
        ag::Mat<S> k = wk_.forward_eval(h);
        ag::Mat<S> v = wv_.forward_eval(h);
        ag::Mat<S> merged(cfg_.lc, cfg_.enc_dim);
        for (int hd = 0; hd < cfg_.heads; ++hd) {
            ag::Mat<S> scores =
                q.middleCols(hd * dh, dh) * k.middleCols(hd * dh, dh).transpose() * inv_sqrt;
            merged.middleCols(hd * dh, dh) =
                nn::softmax_rows_eval(scores) * v.middleCols(hd * dh, dh);
        }
        return out_proj_.forward_eval(merged);
    }

private:
    AggregatorConfig cfg_;
    ag::ParamStore<S>* ps_;
    int temporal_pos_ = -1, queries_ = -1;
    std::vector<nn::TransformerBlock<S>> blocks_;
    nn::Linear<S> wq_, wk_, wv_, out_proj_;
};

}  // namespace recon3d
