#include "recon3d/harness/paper_check.hpp"

#include <chrono>
#include <sstream>

#include "recon3d/fbdm/diffusion.hpp"
#include "recon3d/nfe/frame_encoder.hpp"
#include "recon3d/nfe/vision_encoder.hpp"

namespace recon3d {

namespace {
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string shape_str(Eigen::Index r, Eigen::Index c) {
    std::ostringstream os;
    os << r << "x" << c;
    return os.str();
}
}  // namespace

std::string PaperScaleReport::text() const {
    std::ostringstream os;
    os << "paper-scale instantiation check\n";
    for (const auto& m : modules)
        os << "  " << m.name << ": params=" << m.params << " output=" << m.output_shape
           << " forward=" << m.seconds << "s\n";
    os << "  total parameters: " << total_params() << "\n";
    return os.str();
}

PaperScaleReport run_paper_scale_check(const ExperimentConfig& paper) {
    PaperScaleReport report;

    {  // neuro-fusion encoder + aggregation on one six-frame item
        auto t0 = Clock::now();
        ag::ParamStore<float> ps;
        Rng rng(derive_seed(paper.seed, {0x91ULL}));
        FrameEncoder<float> ef(ps, rng, paper.frame_encoder);
        Aggregator<float> fa(ps, rng, paper.fa);
        std::vector<ImageF> frames(6, ImageF::Zero(paper.frame_encoder.image_size,
                                                   paper.frame_encoder.image_size));
        auto tokens = ef.encode_frames(frames);
        ag::Mat<float> cf = fa.forward_eval(tokens);
        if (cf.rows() != paper.fa.lc || cf.cols() != paper.fa.dc)
            throw shape_error("paper-scale NFE produced an unexpected latent shape");
        report.modules.push_back(
            {"nfe", ps.scalar_count(), shape_str(cf.rows(), cf.cols()), since(t0)});
    }

    {  // feature bridge denoiser, one timestep
        auto t0 = Clock::now();
        ag::ParamStore<float> ps;
        Rng rng(derive_seed(paper.seed, {0x92ULL}));
        Denoiser<float> den(ps, rng, paper.fbdm);
        ag::Mat<float> x = ag::Mat<float>::Zero(paper.fbdm.lc, paper.fbdm.dc);
        ag::Mat<float> eps = den.predict(x, paper.timesteps, x);
        if (eps.rows() != paper.fbdm.lc || eps.cols() != paper.fbdm.dc)
            throw shape_error("paper-scale denoiser produced an unexpected shape");
        report.modules.push_back(
            {"fbdm", ps.scalar_count(), shape_str(eps.rows(), eps.cols()), since(t0)});
    }

    {  // VQ autoencoder round trip on one grid
        auto t0 = Clock::now();
        ag::ParamStore<float> ps;
        Rng rng(derive_seed(paper.seed, {0x93ULL}));
        VqModel<float> vq(ps, rng, paper.vq);
        VoxelGrid grid(paper.vq.resolution);
        int c = paper.vq.resolution / 2;
        for (int dz = -4; dz <= 4; ++dz)
            for (int dy = -4; dy <= 4; ++dy)
                for (int dx = -4; dx <= 4; ++dx)
                    if (dx * dx + dy * dy + dz * dz <= 16)
                        grid.set(c + dx, c + dy, c + dz, 1);
        CodeSequence codes = vq.encode(grid);
        VoxelGrid back = vq.decode(codes);
        if (back.resolution != paper.vq.resolution)
            throw shape_error("paper-scale VQ produced an unexpected resolution");
        report.modules.push_back({"lad.vq", ps.scalar_count(),
                                  std::to_string(codes.codes.size()) + " codes", since(t0)});
    }

    {  // decoder transformer: streamed block-by-block single forward
        auto t0 = Clock::now();
        const ArConfig& cfg = paper.ar;
        const Eigen::Index len = cfg.lc + 1 + cfg.code_len;
        std::size_t params = 0;

        ag::Mat<float> x;
        {
            ag::ParamStore<float> ps;
            Rng rng(derive_seed(paper.seed, {0x94ULL}));
            int tok = ps.add("ar.token_emb", nn::normal_init<float>(rng, cfg.vocab, cfg.width, 0.02));
            int pos = ps.add("ar.pos", nn::normal_init<float>(rng, cfg.seq_capacity(), cfg.width, 0.02));
            nn::Linear<float> cond(ps, rng, "ar.cond", cfg.dc, cfg.width);
            int sep = ps.add("ar.sep", nn::normal_init<float>(rng, 1, cfg.width, 0.02));
            x.resize(len, cfg.width);
            x.topRows(cfg.lc) = cond.forward_eval(ag::Mat<float>::Zero(cfg.lc, cfg.dc));
            x.row(cfg.lc) = ps.value(sep).row(0);
            for (Eigen::Index i = cfg.lc + 1; i < len; ++i) x.row(i) = ps.value(tok).row(0);
            x += ps.value(pos).topRows(len);
            params += ps.scalar_count();
        }
        for (int b = 0; b < cfg.depth; ++b) {
            ag::ParamStore<float> ps;
            Rng rng(derive_seed(paper.seed, {0x95ULL, static_cast<std::uint64_t>(b)}));
            nn::TransformerBlock<float> block(ps, rng, "ar.block", cfg.width, cfg.heads,
                                              cfg.mlp_hidden());
            x = block.forward_eval(x, /*causal=*/true);
            params += ps.scalar_count();
            if (cfg.with_adapters && (b + 1) % cfg.adapter_period == 0) {
                ag::ParamStore<float> aps;
                Rng arng(derive_seed(paper.seed, {0x96ULL, static_cast<std::uint64_t>(b)}));
                nn::Linear<float> down(aps, arng, "a.down", cfg.width, cfg.bottleneck());
                nn::Linear<float> up(aps, arng, "a.up", cfg.bottleneck(), cfg.width, true);
                nn::Linear<float> cf(aps, arng, "a.cf", cfg.dc, cfg.bottleneck());
                ag::Mat<float> z = down.forward_eval(x);
                z.rowwise() += Eigen::RowVectorXf(
                    cf.forward_eval(ag::Mat<float>::Zero(1, cfg.dc)).row(0));
                x += up.forward_eval(nn::gelu_eval(z));
                params += aps.scalar_count();
            }
        }
        ag::Mat<float> logits;
        {
            ag::ParamStore<float> ps;
            Rng rng(derive_seed(paper.seed, {0x97ULL}));
            nn::LayerNorm<float> ln(ps, "ar.final_ln", cfg.width);
            nn::Linear<float> head(ps, rng, "ar.head", cfg.width, cfg.vocab);
            logits = head.forward_eval(ln.forward_eval(x.bottomRows(1)));
            params += ps.scalar_count();
        }
        if (logits.cols() != cfg.vocab)
            throw shape_error("paper-scale decoder produced an unexpected vocabulary width");
        report.modules.push_back(
            {"lad.ar", params, shape_str(len, cfg.width) + " -> " + shape_str(1, cfg.vocab),
             since(t0)});
    }

    return report;
}

}  // namespace recon3d
