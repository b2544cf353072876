#pragma once

#include <vector>

#include "recon3d/lad/codebook.hpp"
#include "recon3d/nn/blocks.hpp"
#include "recon3d/synth/voxel.hpp"

namespace recon3d {

/// Discrete shape code: m = g^3 codebook indices, x-fastest cell order
/// (index = gx + g*(gy + g*gz)).
struct CodeSequence {
    std::vector<int> codes;
    int grid = 0;  // g
};

struct VqConfig {
    int resolution = 32;
    int cell = 4;  // block side; latent grid g = resolution / cell
    int codebook_size = 256;
    int code_dim = 64;
    int hidden = 64;
    double commitment_weight = 0.25;

    int latent_grid() const { return resolution / cell; }
    int cells() const { return latent_grid() * latent_grid() * latent_grid(); }
    int block_dim() const { return cell * cell * cell; }

    void validate() const {
        if (resolution % cell != 0)
            throw config_error("vq: resolution must be divisible by cell size");
        if (codebook_size < 2) throw config_error("vq: codebook needs at least 2 entries");
    }
};

/// Voxel VQ autoencoder: conv-style block downsampling (one linear map per
/// cell block), a 3x3x3 neighbourhood mixing layer on the latent grid,
/// per-cell quantization against a learned codebook, and the mirrored
/// upsampling decoder emitting occupancy logits.
template <typename S>
class VqModel {
public:
    VqModel(ag::ParamStore<S>& store, Rng& rng, const VqConfig& cfg) : cfg_(cfg), ps_(&store) {
        cfg_.validate();
        enc_in_ = nn::Linear<S>(store, rng, "vq.enc_in", cfg.block_dim(), cfg.hidden);
        enc_ctx_ = nn::Linear<S>(store, rng, "vq.enc_ctx", 27 * cfg.hidden, cfg.hidden);
        enc_out_ = nn::Linear<S>(store, rng, "vq.enc_out", cfg.hidden, cfg.code_dim);
        codebook_ = store.add("vq.codebook",
                              nn::normal_init<S>(rng, cfg.codebook_size, cfg.code_dim, 0.5));
        dec_in_ = nn::Linear<S>(store, rng, "vq.dec_in", cfg.code_dim, cfg.hidden);
        dec_ctx_ = nn::Linear<S>(store, rng, "vq.dec_ctx", 27 * cfg.hidden, cfg.hidden);
        dec_out_ = nn::Linear<S>(store, rng, "vq.dec_out", cfg.hidden, cfg.block_dim());
    }

    const VqConfig& config() const { return cfg_; }
    const ag::Mat<S>& codebook() const { return ps_->value(codebook_); }
    int codebook_param_id() const { return codebook_; }

    /// (cells x block_dim) matrix of flattened occupancy blocks.
    ag::Mat<S> blockify(const VoxelGrid& grid) const {
        if (grid.resolution != cfg_.resolution)
            throw shape_error("vq: grid resolution mismatch");
        const int g = cfg_.latent_grid(), c = cfg_.cell;
        ag::Mat<S> out(cfg_.cells(), cfg_.block_dim());
        for (int gz = 0; gz < g; ++gz)
            for (int gy = 0; gy < g; ++gy)
                for (int gx = 0; gx < g; ++gx) {
                    Eigen::Index row = gx + g * (gy + g * gz);
                    int col = 0;
                    for (int dz = 0; dz < c; ++dz)
                        for (int dy = 0; dy < c; ++dy)
                            for (int dx = 0; dx < c; ++dx)
                                out(row, col++) = static_cast<S>(
                                    grid.at(gx * c + dx, gy * c + dy, gz * c + dz));
                }
        return out;
    }

    VoxelGrid unblockify(const ag::Mat<S>& logits) const {
        const int g = cfg_.latent_grid(), c = cfg_.cell;
        VoxelGrid grid(cfg_.resolution);
        for (int gz = 0; gz < g; ++gz)
            for (int gy = 0; gy < g; ++gy)
                for (int gx = 0; gx < g; ++gx) {
                    Eigen::Index row = gx + g * (gy + g * gz);
                    int col = 0;
                    for (int dz = 0; dz < c; ++dz)
                        for (int dy = 0; dy < c; ++dy)
                            for (int dx = 0; dx < c; ++dx) {
                                // threshold 0.5 on the sigmoid, i.e. logit >= 0; ties occupied
                                grid.set(gx * c + dx, gy * c + dy, gz * c + dz,
                                         logits(row, col++) >= S(0) ? 1 : 0);
                            }
                }
        return grid;
    }

    CodeSequence encode(const VoxelGrid& grid) const {
        ag::Mat<S> z = encode_features(grid);
        CodeSequence seq;
        seq.grid = cfg_.latent_grid();
        seq.codes.reserve(static_cast<std::size_t>(z.rows()));
        const auto& cb = codebook();
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            seq.codes.push_back(quantize<S>(z.row(i), cb).index);
        return seq;
    }

    VoxelGrid decode(const CodeSequence& seq) const {
        if (static_cast<int>(seq.codes.size()) != cfg_.cells())
            throw shape_error("vq decode: expected " + std::to_string(cfg_.cells()) + " codes");
        const auto& cb = codebook();
        ag::Mat<S> q(cfg_.cells(), cfg_.code_dim);
        for (std::size_t i = 0; i < seq.codes.size(); ++i) {
            int c = seq.codes[i];
            if (c < 0 || c >= cfg_.codebook_size)
                throw validation_error("vq decode: code index out of range");
            q.row(static_cast<Eigen::Index>(i)) = cb.row(c);
        }
        return unblockify(decode_logits_eval(q));
    }

    struct LossBreakdown {
        double recon = 0;
        double codebook = 0;
        double commitment = 0;
    };

    /// Training loss: reconstruction BCE + codebook loss + commitment
    /// (weight 0.25), straight-through gradients through the quantizer.
    /// Also reports per-code usage counts for dead-code restarts.
    ag::Var<S> loss_ag(ag::Graph<S>& g, const VoxelGrid& grid, std::vector<int>* usage,
                       LossBreakdown* breakdown = nullptr) const {
        ag::Mat<S> blocks = blockify(grid);
        ag::Var<S> h = ag::gelu(g, enc_in_.forward(g, g.constant(blocks)));
        h = ag::gelu(g, enc_ctx_.forward(g, gather_neighbors_ag(g, h)));
        ag::Var<S> z = enc_out_.forward(g, h);

        const auto& cb = codebook();
        ag::Mat<S> quantized(z.rows(), z.cols());
        std::vector<int> ids(static_cast<std::size_t>(z.rows()));
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            auto r = quantize<S>(z.value().row(i), cb);
            quantized.row(i) = r.vector;
            ids[static_cast<std::size_t>(i)] = r.index;
            if (usage) (*usage)[static_cast<std::size_t>(r.index)]++;
        }

        // straight-through reconstruction path
        ag::Var<S> zq = ag::st_passthrough(g, z, quantized);
        ag::Var<S> logits = decode_logits_ag(g, zq);
        ag::Var<S> recon = ag::bce_logits_mean(g, logits, blocks);

        // codebook pulls entries toward encoder outputs; commitment pulls
        // encoder outputs toward their entries
        ag::Var<S> gathered = ag::embedding_rows(g, g.param(codebook_), ids);
        ag::Var<S> cb_loss = ag::mse_const(g, gathered, z.value());
        ag::Var<S> commit = ag::mse_const(g, z, quantized);
        if (breakdown) {
            breakdown->recon = recon.value()(0, 0);
            breakdown->codebook = cb_loss.value()(0, 0);
            breakdown->commitment = cfg_.commitment_weight * commit.value()(0, 0);
        }
        return ag::add(g, recon,
                       ag::add(g, cb_loss,
                               ag::scale(g, commit, static_cast<S>(cfg_.commitment_weight))));
    }

    /// Restarts unused codebook entries at random encoder outputs.
    void restart_dead_codes(const std::vector<int>& usage, const std::vector<VoxelGrid>& sample,
                            Rng& rng) {
        std::vector<ag::Mat<S>> feats;
        for (const auto& grid : sample) feats.push_back(encode_features(grid));
        if (feats.empty()) return;
        auto& cb = ps_->value(codebook_);
        for (int k = 0; k < cfg_.codebook_size; ++k) {
            if (usage[static_cast<std::size_t>(k)] > 0) continue;
            const auto& f = feats[static_cast<std::size_t>(rng.uniform_int(
                0, static_cast<std::int64_t>(feats.size()) - 1))];
            Eigen::Index row = rng.uniform_int(0, f.rows() - 1);
            cb.row(k) = f.row(row) +
                        nn::normal_init<S>(rng, 1, cfg_.code_dim, 0.01).row(0);
        }
    }

    ag::Mat<S> encode_features(const VoxelGrid& grid) const {
        ag::Mat<S> h = nn::gelu_eval(enc_in_.forward_eval(blockify(grid)));
        h = nn::gelu_eval(enc_ctx_.forward_eval(gather_neighbors_eval(h)));
        return enc_out_.forward_eval(h);
    }

private:
    ag::Var<S> decode_logits_ag(ag::Graph<S>& g, const ag::Var<S>& zq) const {
        ag::Var<S> h = ag::gelu(g, dec_in_.forward(g, zq));
        h = ag::gelu(g, dec_ctx_.forward(g, gather_neighbors_ag(g, h)));
        return dec_out_.forward(g, h);
    }

    ag::Mat<S> decode_logits_eval(const ag::Mat<S>& zq) const {
        ag::Mat<S> h = nn::gelu_eval(dec_in_.forward_eval(zq));
        h = nn::gelu_eval(dec_ctx_.forward_eval(gather_neighbors_eval(h)));
        return dec_out_.forward_eval(h);
    }

    /// 3x3x3 neighbourhood gather on the latent grid with zero padding:
    /// (cells x hidden) -> (cells x 27*hidden).
    ag::Mat<S> gather_neighbors_eval(const ag::Mat<S>& x) const {
        const int g = cfg_.latent_grid();
        const Eigen::Index hdim = x.cols();
        ag::Mat<S> out = ag::Mat<S>::Zero(x.rows(), 27 * hdim);
        for (int gz = 0; gz < g; ++gz)
            for (int gy = 0; gy < g; ++gy)
                for (int gx = 0; gx < g; ++gx) {
                    Eigen::Index row = gx + g * (gy + g * gz);
                    int slot = 0;
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx, ++slot) {
                                int nx = gx + dx, ny = gy + dy, nz = gz + dz;
                                if (nx < 0 || ny < 0 || nz < 0 || nx >= g || ny >= g || nz >= g)
                                    continue;
                                out.block(row, slot * hdim, 1, hdim) =
                                    x.row(nx + g * (ny + g * nz));
                            }
                }
        return out;
    }

    ag::Var<S> gather_neighbors_ag(ag::Graph<S>& g_, const ag::Var<S>& x) const {
        ag::Mat<S> value = gather_neighbors_eval(x.value());
        const int g = cfg_.latent_grid();
        const Eigen::Index hdim = x.cols();
        return g_.make(std::move(value), {x}, [x, g, hdim](ag::Node<S>& n) mutable {
            if (!x.node()->needs_grad) return;
            x.node()->ensure_grad();
            auto& gx_grad = x.node()->grad;
            for (int gz = 0; gz < g; ++gz)
                for (int gy = 0; gy < g; ++gy)
                    for (int gx = 0; gx < g; ++gx) {
                        Eigen::Index row = gx + g * (gy + g * gz);
                        int slot = 0;
                        for (int dz = -1; dz <= 1; ++dz)
                            for (int dy = -1; dy <= 1; ++dy)
                                for (int dx = -1; dx <= 1; ++dx, ++slot) {
                                    int nx = gx + dx, ny = gy + dy, nz = gz + dz;
                                    if (nx < 0 || ny < 0 || nz < 0 || nx >= g || ny >= g ||
                                        nz >= g)
                                        continue;
                                    gx_grad.row(nx + g * (ny + g * nz)) +=
                                        n.grad.block(row, slot * hdim, 1, hdim);
                                }
                    }
        });
    }

    VqConfig cfg_;
    ag::ParamStore<S>* ps_;
    nn::Linear<S> enc_in_, enc_ctx_, enc_out_, dec_in_, dec_ctx_, dec_out_;
    int codebook_ = -1;
};

}  // namespace recon3d
