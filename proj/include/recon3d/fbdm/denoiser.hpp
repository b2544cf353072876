#pragma once

#include <string>
#include <vector>

#include "recon3d/nn/blocks.hpp"

namespace recon3d {

/// Transformer noise predictor over latent feature tokens. Token layout:
/// [time (1) | condition c_f (L_c) | noisy feature x_t (L_c) | learnable
/// output tokens (L_c)]; the prediction is read exclusively from the
/// output-token rows.
struct DenoiserConfig {
    int width = 128;
    int depth = 3;
    int heads = 4;
    int lc = 16;       // token count per latent feature
    int dc = 128;      // latent feature width
    double mlp_ratio = 2.0;

    int total_tokens() const { return 1 + 3 * lc; }
    int mlp_hidden() const { return std::max(1, static_cast<int>(width * mlp_ratio)); }
};

template <typename S>
class Denoiser {
public:
    Denoiser(ag::ParamStore<S>& store, Rng& rng, const DenoiserConfig& cfg) : cfg_(cfg), ps_(&store) {
        time_proj_ = nn::Linear<S>(store, rng, "fbdm.time", cfg.width, cfg.width);
        cond_proj_ = nn::Linear<S>(store, rng, "fbdm.cond", cfg.dc, cfg.width);
        x_proj_ = nn::Linear<S>(store, rng, "fbdm.x", cfg.dc, cfg.width);
        out_tokens_ = store.add("fbdm.out_tokens",
                                nn::normal_init<S>(rng, cfg.lc, cfg.width, 0.02));
        pos_emb_ = store.add("fbdm.pos",
                             nn::normal_init<S>(rng, cfg.total_tokens(), cfg.width, 0.02));
        for (int i = 0; i < cfg.depth; ++i)
            blocks_.emplace_back(store, rng, "fbdm.block" + std::to_string(i), cfg.width,
                                 cfg.heads, cfg.mlp_hidden());
        final_ln_ = nn::LayerNorm<S>(store, "fbdm.final_ln", cfg.width);
        out_proj_ = nn::Linear<S>(store, rng, "fbdm.out", cfg.width, cfg.dc);
    }

    const DenoiserConfig& config() const { return cfg_; }

    ag::Var<S> predict_ag(ag::Graph<S>& g, const ag::Var<S>& x_t, int t,
                          const ag::Var<S>& cond_tokens) const {
        check_shapes(x_t.rows(), x_t.cols(), cond_tokens.rows(), cond_tokens.cols());
        ag::Var<S> time_tok = time_proj_.forward(
            g, g.constant(nn::sinusoid_row<S>(static_cast<double>(t), cfg_.width)));
        ag::Var<S> cond = cond_proj_.forward(g, cond_tokens);
        ag::Var<S> x = x_proj_.forward(g, x_t);
        ag::Var<S> out_tok = g.param(out_tokens_);
        ag::Var<S> tokens = ag::concat_rows(g, {time_tok, cond, x, out_tok});
        tokens = ag::add(g, tokens, g.param(pos_emb_));
        for (const auto& b : blocks_) tokens = b.forward(g, tokens, false);
        ag::Var<S> out = ag::slice_rows(g, tokens, 1 + 2 * cfg_.lc, cfg_.lc);
        return out_proj_.forward(g, final_ln_.forward(g, out));
    }

    /// Deterministic inference path.
    ag::Mat<S> predict(const ag::Mat<S>& x_t, int t, const ag::Mat<S>& cond_tokens) const {
        check_shapes(x_t.rows(), x_t.cols(), cond_tokens.rows(), cond_tokens.cols());
        ag::Mat<S> tokens(cfg_.total_tokens(), cfg_.width);
        tokens.row(0) =
            time_proj_.forward_eval(nn::sinusoid_row<S>(static_cast<double>(t), cfg_.width)).row(0);
        tokens.middleRows(1, cfg_.lc) = cond_proj_.forward_eval(cond_tokens);
        tokens.middleRows(1 + cfg_.lc, cfg_.lc) = x_proj_.forward_eval(x_t);
        tokens.middleRows(1 + 2 * cfg_.lc, cfg_.lc) = ps_->value(out_tokens_);
        tokens += ps_->value(pos_emb_);
        for (const auto& b : blocks_) tokens = b.forward_eval(tokens, false);
        ag::Mat<S> out = tokens.middleRows(1 + 2 * cfg_.lc, cfg_.lc);
        return out_proj_.forward_eval(final_ln_.forward_eval(out));
    }

private:
    void check_shapes(Eigen::Index xr, Eigen::Index xc, Eigen::Index cr, Eigen::Index cc) const {
        if (xr != cfg_.lc || xc != cfg_.dc)
            throw shape_error("denoiser: x_t must be L_c x D_c");
        if (cr != cfg_.lc || cc != cfg_.dc)
            throw shape_error("denoiser: condition tokens must be L_c x D_c");
    }

    DenoiserConfig cfg_;
    ag::ParamStore<S>* ps_;
    nn::Linear<S> time_proj_, cond_proj_, x_proj_, out_proj_;
    int out_tokens_ = -1, pos_emb_ = -1;
    std::vector<nn::TransformerBlock<S>> blocks_;
    nn::LayerNorm<S> final_ln_;
};

}  // namespace recon3d
