#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recon3d/eval/report.hpp"
#include "recon3d/harness/train.hpp"

namespace recon3d {

/// Writes (or regenerates) the dataset for a config; returns the manifest path.
std::filesystem::path cmd_gen_data(const ExperimentConfig& cfg, const LogFn& log);

/// Stage 1: vision classifier pretraining (then frozen) plus joint
/// encoder/aggregator/temperature/denoiser training. Saves checkpoints and
/// the run record under cfg.out_dir.
void cmd_train_stage1(const ExperimentConfig& cfg, const LogFn& log);

/// Stage 2: requires stage-1 checkpoints; pretrains the VQ autoencoder and
/// the base autoregressive decoder on ground-truth codes when missing, then
/// tunes adapters, condition projections and the upstream encoder while the
/// frozen groups keep their hashes.
void cmd_train_stage2(const ExperimentConfig& cfg, const LogFn& log);

/// Reconstructs every trial of a split and scores it against ground truth.
/// The report carries a ground-truth control row plus the method row.
MetricReport cmd_evaluate(const ExperimentConfig& cfg, const std::string& split,
                          const LogFn& log);

/// Trains and evaluates {full, no_diffusion, no_contrastive, no_both} with
/// shared vision/VQ/base-decoder weights; returns one row per variant.
MetricReport cmd_ablate(const ExperimentConfig& cfg, const LogFn& log);

/// Cross-subject (ap) and cross-subject-and-class (apac) evaluation with
/// the core-trained checkpoints.
std::map<std::string, MetricReport> cmd_ood(const ExperimentConfig& cfg, const LogFn& log);

struct RoiAnalysis {
    struct Variant {
        std::string name;  // c_f | c_v | c_v_hat
        double lambda = 0;
        double inside = 0;
        double outside = 0;
        double mean_r = 0;
    };
    std::vector<Variant> variants;
    std::string text() const;
};

/// Ridge encoding analysis: fit c_f/c_v/generated-c_v to signal frames on
/// the train split, correlate predictions on test, contrast ROI vs rest.
RoiAnalysis cmd_analyze(const ExperimentConfig& cfg, const LogFn& log);

/// Renders the recorded metric tables and GT-vs-reconstruction view grids
/// for a finished run directory.
void cmd_report(const std::filesystem::path& run_dir, const LogFn& log);

/// 8-bit binary PGM export for report image grids; values clamped to [0,1].
void save_pgm(const ImageF& img, const std::filesystem::path& path);

/// Key/value run record (JSON) helpers.
void record_update(const std::filesystem::path& run_dir, const std::string& key,
                   const std::string& json_value);
std::string record_read(const std::filesystem::path& run_dir);

}  // namespace recon3d
