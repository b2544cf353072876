#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "recon3d/nn/blocks.hpp"

namespace recon3d {

struct ArConfig {
    int vocab = 256;
    int width = 128;
    int depth = 4;
    int heads = 4;
    int lc = 16;   // condition prefix tokens
    int dc = 128;  // condition feature width
    int code_len = 512;
    int adapter_period = 4;       // insert an adapter after every T blocks
    int adapter_bottleneck = 0;   // 0 -> width / 8
    double mlp_ratio = 2.0;
    int max_seq = 0;  // position table length; 0 -> lc + 1 + code_len
    bool with_adapters = true;

    int bottleneck() const { return adapter_bottleneck > 0 ? adapter_bottleneck : width / 8; }
    int seq_capacity() const { return max_seq > 0 ? max_seq : lc + 1 + code_len; }
    int adapter_count() const { return with_adapters ? depth / adapter_period : 0; }
    int mlp_hidden() const { return std::max(1, static_cast<int>(width * mlp_ratio)); }

    void validate() const {
        if (width % heads != 0) throw config_error("ar: width must be divisible by heads");
        if (adapter_period < 1) throw config_error("ar: adapter period must be >= 1");
        if (seq_capacity() < lc + 1 + code_len)
            throw config_error("ar: position table shorter than the working sequence");
    }
};

/// Conditional causal transformer over code sequences. The generated-vision
/// tokens are projected and prepended with a learned separator; the pooled
/// signal feature is fused through bottleneck adapters (zero-initialised up
/// projection, so an untuned adapter is the identity).
template <typename S>
class ArDecoder {
public:
    struct Adapter {
        nn::Linear<S> down, up, cf_proj;
        int after_block = 0;
    };

    ArDecoder(ag::ParamStore<S>& store, Rng& rng, const ArConfig& cfg) : cfg_(cfg), ps_(&store) {
        cfg_.validate();
        token_emb_ = store.add("ar.token_emb",
                               nn::normal_init<S>(rng, cfg.vocab, cfg.width, 0.02));
        pos_emb_ = store.add("ar.pos",
                             nn::normal_init<S>(rng, cfg.seq_capacity(), cfg.width, 0.02));
        base_ids_ = {token_emb_, pos_emb_};
        for (int i = 0; i < cfg.depth; ++i) {
            blocks_.emplace_back(store, rng, "ar.block" + std::to_string(i), cfg.width, cfg.heads,
                                 cfg.mlp_hidden());
            collect_block_ids(blocks_.back());
        }
        final_ln_ = nn::LayerNorm<S>(store, "ar.final_ln", cfg.width);
        base_ids_.push_back(final_ln_.gamma);
        base_ids_.push_back(final_ln_.beta);
        head_ = nn::Linear<S>(store, rng, "ar.head", cfg.width, cfg.vocab);
        base_ids_.push_back(head_.w);
        base_ids_.push_back(head_.b);

        // conditioning path (trainable in stage 2)
        cond_proj_ = nn::Linear<S>(store, rng, "ar.cond", cfg.dc, cfg.width);
        sep_ = store.add("ar.sep", nn::normal_init<S>(rng, 1, cfg.width, 0.02));
        cond_ids_ = {cond_proj_.w, cond_proj_.b, sep_};

        // adapters drawn from a derived stream so base weights are
        // identical with and without them
        Rng arng(derive_seed(rng.next_u64(), {0xada7ULL}));
        if (cfg.with_adapters) {
            for (int i = cfg.adapter_period - 1; i < cfg.depth; i += cfg.adapter_period) {
                Adapter a;
                std::string name = "ar.adapter" + std::to_string(i);
                a.down = nn::Linear<S>(store, arng, name + ".down", cfg.width, cfg.bottleneck());
                a.up = nn::Linear<S>(store, arng, name + ".up", cfg.bottleneck(), cfg.width,
                                     /*zero_init=*/true);
                a.cf_proj = nn::Linear<S>(store, arng, name + ".cf", cfg.dc, cfg.bottleneck());
                a.after_block = i;
                adapters_.push_back(a);
                for (int id : {a.down.w, a.down.b, a.up.w, a.up.b, a.cf_proj.w, a.cf_proj.b})
                    adapter_ids_.push_back(id);
            }
        }
    }

    const ArConfig& config() const { return cfg_; }
    const std::vector<int>& frozen_base_ids() const { return base_ids_; }
    const std::vector<int>& adapter_ids() const { return adapter_ids_; }
    const std::vector<int>& cond_ids() const { return cond_ids_; }
    int adapter_count() const { return static_cast<int>(adapters_.size()); }
    nn::Linear<S>& head() { return head_; }

    /// Teacher-forced logits for every position: row i predicts codes[i].
    ag::Var<S> logits_ag(ag::Graph<S>& g, const std::vector<int>& codes,
                         const ag::Var<S>& cond_tokens, const ag::Var<S>& cf_pooled) const {
        const int m = static_cast<int>(codes.size());
        if (m < 1 || m > cfg_.code_len) throw argument_error("ar: bad code sequence length");
        std::vector<int> fed(codes.begin(), codes.end() - 1);
        ag::Var<S> cond = cond_proj_.forward(g, cond_tokens);
        std::vector<ag::Var<S>> parts = {cond, g.param(sep_)};
        if (!fed.empty()) parts.push_back(ag::embedding_rows(g, g.param(token_emb_), fed));
        ag::Var<S> tokens = ag::concat_rows(g, parts);
        tokens = ag::add(g, tokens, ag::slice_rows(g, g.param(pos_emb_), 0, tokens.rows()));

        std::vector<ag::Var<S>> cf_bottleneck(adapters_.size());
        for (std::size_t a = 0; a < adapters_.size(); ++a)
            cf_bottleneck[a] = adapters_[a].cf_proj.forward(g, cf_pooled);

        std::size_t next_adapter = 0;
        for (int b = 0; b < cfg_.depth; ++b) {
            tokens = blocks_[static_cast<std::size_t>(b)].forward(g, tokens, /*causal=*/true);
            if (next_adapter < adapters_.size() &&
                adapters_[next_adapter].after_block == b) {
                const Adapter& a = adapters_[next_adapter];
                ag::Var<S> z = ag::add_rowvec(g, a.down.forward(g, tokens),
                                              cf_bottleneck[next_adapter]);
                tokens = ag::add(g, tokens, a.up.forward(g, ag::gelu(g, z)));
                ++next_adapter;
            }
        }
        ag::Var<S> h = ag::slice_rows(g, final_ln_.forward(g, tokens), cfg_.lc, m);
        return head_.forward(g, h);
    }

    /// Probability vector over the vocabulary for the next position after
    /// `prefix` (possibly empty). Deterministic.
    Eigen::VectorXd ar_logits(const std::vector<int>& prefix, const ag::Mat<S>& cond_tokens,
                              const ag::Mat<S>& cf_pooled) const {
        if (static_cast<int>(prefix.size()) >= cfg_.code_len)
            throw argument_error("ar_logits: prefix is already a full sequence");
        ag::Mat<S> logits = full_logits_eval(prefix, cond_tokens, cf_pooled, true);
        Eigen::VectorXd row = logits.row(logits.rows() - 1).template cast<double>();
        double mx = row.maxCoeff();
        Eigen::VectorXd p = (row.array() - mx).exp();
        return p / p.sum();
    }

    /// Mean negative log-likelihood of a full code sequence (teacher forced).
    double nll(const std::vector<int>& codes, const ag::Mat<S>& cond_tokens,
               const ag::Mat<S>& cf_pooled) const {
        if (codes.empty()) throw argument_error("nll: empty code sequence");
        for (int c : codes)
            if (c < 0 || c >= cfg_.vocab) throw validation_error("nll: code index out of range");
        ag::Mat<S> logits = full_logits_eval(codes, cond_tokens, cf_pooled, false);
        double total = 0;
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            Eigen::VectorXd row = logits.row(i).template cast<double>();
            double mx = row.maxCoeff();
            double lse = mx + std::log((row.array() - mx).exp().sum());
            total += lse - row(codes[static_cast<std::size_t>(i)]);
        }
        return total / static_cast<double>(logits.rows());
    }

    /// Ancestral sampling with per-block key/value caches. temperature -> 0
    /// reduces to greedy argmax; top_k <= 0 disables truncation.
    std::vector<int> sample(const ag::Mat<S>& cond_tokens, const ag::Mat<S>& cf_pooled,
                            double temperature, int top_k, std::uint64_t seed) const {
        if (temperature < 0) throw argument_error("ar sample: temperature must be >= 0");
        Rng rng(derive_seed(seed, {0xa55aULL}));
        std::vector<nn::KvCache<S>> caches(blocks_.size());
        const Eigen::Index cap = cfg_.lc + 1 + cfg_.code_len;
        for (auto& c : caches) c.reset(cap, cfg_.width);
        std::vector<ag::Mat<S>> cf_bottleneck;
        for (const auto& a : adapters_) cf_bottleneck.push_back(a.cf_proj.forward_eval(cf_pooled));

        ag::Mat<S> cond = cond_proj_.forward_eval(cond_tokens);
        ag::Mat<S> last_hidden;
        Eigen::Index pos = 0;
        auto feed = [&](const ag::Mat<S>& row) {
            ag::Mat<S> h = row + ps_->value(pos_emb_).row(pos);
            ++pos;
            std::size_t next_adapter = 0;
            for (std::size_t b = 0; b < blocks_.size(); ++b) {
                h = blocks_[b].step_eval(h, caches[b]);
                if (next_adapter < adapters_.size() &&
                    adapters_[next_adapter].after_block == static_cast<int>(b)) {
                    const Adapter& a = adapters_[next_adapter];
                    ag::Mat<S> z = a.down.forward_eval(h) + cf_bottleneck[next_adapter];
                    h += a.up.forward_eval(nn::gelu_eval(z));
                    ++next_adapter;
                }
            }
            last_hidden = final_ln_.forward_eval(h);
        };

        for (Eigen::Index i = 0; i < cond.rows(); ++i) feed(cond.row(i));
        feed(ps_->value(sep_));

        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(cfg_.code_len));
        for (int i = 0; i < cfg_.code_len; ++i) {
            Eigen::VectorXd logits =
                head_.forward_eval(last_hidden).row(0).template cast<double>();
            int chosen;
            if (temperature <= 1e-6) {
                Eigen::Index arg = 0;
                logits.maxCoeff(&arg);
                chosen = static_cast<int>(arg);
            } else {
                Eigen::VectorXd scaled = logits / temperature;
                if (top_k > 0 && top_k < cfg_.vocab) {
                    std::vector<double> sorted(scaled.data(), scaled.data() + scaled.size());
                    std::nth_element(sorted.begin(), sorted.end() - top_k, sorted.end());
                    double cut = sorted[sorted.size() - static_cast<std::size_t>(top_k)];
                    for (Eigen::Index j = 0; j < scaled.size(); ++j)
                        if (scaled(j) < cut) scaled(j) = -1e30;
                }
                double mx = scaled.maxCoeff();
                Eigen::VectorXd p = (scaled.array() - mx).exp();
                p /= p.sum();
                double r = rng.uniform(), acc = 0;
                chosen = cfg_.vocab - 1;
                for (Eigen::Index j = 0; j < p.size(); ++j) {
                    acc += p(j);
                    if (r < acc) {
                        chosen = static_cast<int>(j);
                        break;
                    }
                }
            }
            out.push_back(chosen);
            if (i + 1 < cfg_.code_len)
                feed(ps_->value(token_emb_).row(chosen));
        }
        return out;
    }

private:
    /// Shared eval-path forward. When `as_prefix` the whole given sequence
    /// is fed (for next-token prediction); otherwise the last code is a
    /// target only, matching logits_ag.
    ag::Mat<S> full_logits_eval(const std::vector<int>& codes, const ag::Mat<S>& cond_tokens,
                                const ag::Mat<S>& cf_pooled, bool as_prefix) const {
        std::vector<int> fed = codes;
        if (!as_prefix && !fed.empty()) fed.pop_back();
        const Eigen::Index len = cfg_.lc + 1 + static_cast<Eigen::Index>(fed.size());
        ag::Mat<S> tokens(len, cfg_.width);
        tokens.topRows(cfg_.lc) = cond_proj_.forward_eval(cond_tokens);
        tokens.row(cfg_.lc) = ps_->value(sep_).row(0);
        for (std::size_t i = 0; i < fed.size(); ++i)
            tokens.row(cfg_.lc + 1 + static_cast<Eigen::Index>(i)) =
                ps_->value(token_emb_).row(fed[i]);
        tokens += ps_->value(pos_emb_).topRows(len);

        std::vector<ag::Mat<S>> cf_bottleneck;
        for (const auto& a : adapters_) cf_bottleneck.push_back(a.cf_proj.forward_eval(cf_pooled));
        std::size_t next_adapter = 0;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            tokens = blocks_[b].forward_eval(tokens, /*causal=*/true);
            if (next_adapter < adapters_.size() &&
                adapters_[next_adapter].after_block == static_cast<int>(b)) {
                const Adapter& a = adapters_[next_adapter];
                ag::Mat<S> z = a.down.forward_eval(tokens);
                z.rowwise() += Eigen::RowVector<S, Eigen::Dynamic>(cf_bottleneck[next_adapter].row(0));
                tokens += a.up.forward_eval(nn::gelu_eval(z));
                ++next_adapter;
            }
        }
        ag::Mat<S> h = final_ln_.forward_eval(tokens);
        Eigen::Index n_out = as_prefix ? 1 + static_cast<Eigen::Index>(fed.size())
                                       : static_cast<Eigen::Index>(codes.size());
        return head_.forward_eval(h.bottomRows(n_out));
    }

    void collect_block_ids(const nn::TransformerBlock<S>& b) {
        for (int id : {b.ln1.gamma, b.ln1.beta, b.ln2.gamma, b.ln2.beta, b.attn.wq.w, b.attn.wq.b,
                       b.attn.wk.w, b.attn.wk.b, b.attn.wv.w, b.attn.wv.b, b.attn.wo.w,
                       b.attn.wo.b, b.mlp.fc1.w, b.mlp.fc1.b, b.mlp.fc2.w, b.mlp.fc2.b})
            base_ids_.push_back(id);
    }

    ArConfig cfg_;
    ag::ParamStore<S>* ps_;
    int token_emb_ = -1, pos_emb_ = -1, sep_ = -1;
    std::vector<nn::TransformerBlock<S>> blocks_;
    nn::LayerNorm<S> final_ln_;
    nn::Linear<S> head_, cond_proj_;
    std::vector<Adapter> adapters_;
    std::vector<int> base_ids_, adapter_ids_, cond_ids_;
};

}  // namespace recon3d
