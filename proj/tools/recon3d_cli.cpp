// Command-line front end: gen-data, train-stage1, train-stage2, reconstruct,
// evaluate, ablate, ood, analyze, report. Every failure exits nonzero with a
// single "error: <reason>" line on stderr.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "recon3d/harness/experiments.hpp"
#include "recon3d/io/voxel_io.hpp"

using namespace recon3d;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    long seed = -1;
    bool paper_scale = false;
};

ExperimentConfig make_config(const GlobalArgs& g) {
    ExperimentConfig cfg = g.paper_scale ? ExperimentConfig::paper_scale()
                                         : ExperimentConfig::desk();
    if (const char* env_root = std::getenv("RECON3D_DATA_ROOT"))
        if (cfg.data.root.empty()) cfg.data.root = env_root;
    if (!g.config_path.empty()) cfg.apply(ConfigFile::parse_file(g.config_path));
    if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    cfg.link();
    return cfg;
}

LogFn stdout_log() {
    return [](const std::string& line) { std::cout << line << "\n" << std::flush; };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale 3D reconstruction from synthetic multi-frame brain signals"};
    app.require_subcommand(1);
    app.fallthrough(true);  // global flags may follow the subcommand

    GlobalArgs g;
    app.add_option("--config", g.config_path, "sectioned key=value config file");
    app.add_option("--seed", g.seed, "global seed override");
    app.add_option("--out", g.out_dir, "run directory override");
    app.add_flag("--paper-scale", g.paper_scale, "start from the paper-scale preset");

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic paired dataset");
    std::string gen_root;
    gen->add_option("--root", gen_root, "dataset root (defaults to config/data.root)");

    auto* t1 = app.add_subcommand("train-stage1", "train encoder, aggregator and diffusion");
    auto* t2 = app.add_subcommand("train-stage2", "pretrain decoder stand-in and tune adapters");

    auto* rec = app.add_subcommand("reconstruct", "reconstruct one trial to an OBJ mesh");
    std::string rec_trial, rec_out = "mesh.obj", rec_voxel;
    long rec_seed = 0;
    rec->add_option("--trial", rec_trial, "trial directory (frame_00..frame_09)")->required();
    rec->add_option("--seed", rec_seed, "sampling seed");
    rec->add_option("--out", rec_out, "output OBJ path");
    rec->add_option("--voxel-out", rec_voxel, "optional voxel.bin output path");

    auto* ev = app.add_subcommand("evaluate", "reconstruct and score a split");
    std::string ev_split = "test";
    ev->add_option("--split", ev_split, "split name (test|ap|apac)");

    auto* ab = app.add_subcommand("ablate", "train and score the four ablation variants");
    auto* ood = app.add_subcommand("ood", "score the across-person and across-class splits");
    auto* an = app.add_subcommand("analyze", "ridge encoding ROI analysis");

    auto* rep = app.add_subcommand("report", "render tables and comparison grids for a run");
    std::string rep_dir;
    rep->add_option("--run", rep_dir, "run directory (defaults to --out)");

    // feature-bridge overrides surfaced as first-class flags
    double beta_min = -1, beta_max = -1;
    long timesteps = -1, sample_seed = -1;
    app.add_option("--timesteps", timesteps, "diffusion timesteps override");
    app.add_option("--beta-min", beta_min, "diffusion beta_min override");
    app.add_option("--beta-max", beta_max, "diffusion beta_max override");
    app.add_option("--sample-seed", sample_seed, "sampling seed override");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = make_config(g);
        if (timesteps > 0) cfg.timesteps = static_cast<int>(timesteps);
        if (beta_min > 0) cfg.beta_min = beta_min;
        if (beta_max > 0) cfg.beta_max = beta_max;
        LogFn log = stdout_log();

        if (gen->parsed()) {
            if (!gen_root.empty()) cfg.data.root = gen_root;
            std::cout << cmd_gen_data(cfg, log).string() << "\n";
        } else if (t1->parsed()) {
            cmd_train_stage1(cfg, log);
        } else if (t2->parsed()) {
            cmd_train_stage2(cfg, log);
        } else if (rec->parsed()) {
            ModelBundle bundle(cfg);
            bundle.load_checkpoints(std::filesystem::path(cfg.out_dir) / "checkpoints");
            FmriTrial trial;
            for (int f = 0; f < kFramesPerTrial; ++f) {
                char name[32];
                std::snprintf(name, sizeof(name), "frame_%02d.f32", f);
                trial.frames.push_back(
                    load_f32_image(std::filesystem::path(rec_trial) / name));
            }
            std::uint64_t seed = sample_seed >= 0 ? static_cast<std::uint64_t>(sample_seed)
                                                  : static_cast<std::uint64_t>(rec_seed);
            ReconOutput out = reconstruct_trial(bundle, trial, seed);
            save_obj(out.mesh, rec_out);
            if (!rec_voxel.empty()) save_voxel(out.voxel, rec_voxel);
            std::cout << "wrote " << rec_out << " (" << out.mesh.triangles.size()
                      << " triangles)\n";
        } else if (ev->parsed()) {
            MetricReport r = cmd_evaluate(cfg, ev_split, log);
            std::cout << r.to_text();
        } else if (ab->parsed()) {
            MetricReport r = cmd_ablate(cfg, log);
            std::cout << r.to_text();
        } else if (ood->parsed()) {
            auto reports = cmd_ood(cfg, log);
            for (auto& [split, r] : reports) {
                std::cout << split << ":\n" << r.to_text();
            }
        } else if (an->parsed()) {
            RoiAnalysis r = cmd_analyze(cfg, log);
            std::cout << r.text();
        } else if (rep->parsed()) {
            cmd_report(rep_dir.empty() ? std::filesystem::path(cfg.out_dir)
                                       : std::filesystem::path(rep_dir),
                       log);
        }
        return 0;
    } catch (const recon3d::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
