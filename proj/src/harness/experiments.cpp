#include "recon3d/harness/experiments.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "recon3d/eval/chamfer.hpp"
#include "recon3d/eval/emd.hpp"
#include "recon3d/eval/encoding.hpp"
#include "recon3d/eval/fpd.hpp"
#include "recon3d/eval/nway.hpp"
#include "recon3d/eval/perceptual.hpp"
#include "recon3d/eval/ssim.hpp"
#include "recon3d/nn/checkpoint.hpp"
#include "recon3d/synth/render.hpp"

namespace recon3d {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kEvalViews = 6;  // every 60 degrees

fs::path run_dir(const ExperimentConfig& cfg) {
    if (cfg.out_dir.empty()) throw config_error("run.out_dir is not set");
    return fs::path(cfg.out_dir);
}

fs::path ckpt_dir(const ExperimentConfig& cfg) { return run_dir(cfg) / "checkpoints"; }

void save_run_config(const ExperimentConfig& cfg) {
    fs::create_directories(run_dir(cfg));
    std::ofstream f(run_dir(cfg) / "config.cfg", std::ios::binary);
    f << cfg.to_config_text();
}

void record_stage(const ExperimentConfig& cfg, const std::string& name, const StageResult& r) {
    json j;
    j["losses"] = r.epoch_losses;
    j["seconds"] = r.wall_seconds;
    record_update(run_dir(cfg), "stage_" + name, j.dump());
}

void record_hashes(const ExperimentConfig& cfg, const ModelBundle& bundle) {
    json j;
    for (const auto& name : bundle.group_names()) j[name] = bundle.group_hash(name);
    record_update(run_dir(cfg), "checkpoints", j.dump());
    record_update(run_dir(cfg), "config_hash", json(cfg.config_hash()).dump());
}

DatasetManifest manifest_for(const ExperimentConfig& cfg) {
    if (cfg.data.root.empty()) throw config_error("data.root is not set");
    return load_manifest(cfg.data.root);
}

std::vector<ImageF> eval_renders(const VoxelGrid& grid, int size) {
    std::vector<ImageF> views;
    views.reserve(kEvalViews);
    for (int i = 0; i < kEvalViews; ++i)
        views.push_back(render_view(grid, i * 60.0, 60.0, size));
    return views;
}

Eigen::VectorXd mean_view_feature(const ModelBundle& bundle, const std::vector<ImageF>& views) {
    Eigen::VectorXd acc;
    for (const auto& v : views) {
        Eigen::VectorXd f = bundle.vision().embed(v).row(0).cast<double>();
        if (acc.size() == 0)
            acc = f;
        else
            acc += f;
    }
    return acc / static_cast<double>(views.size());
}

struct GtEntry {
    std::string object_id;
    VoxelGrid voxel;
    Mesh mesh;
    std::vector<ImageF> renders;
    Eigen::VectorXd vis_feature;
    PointCloud cloud;
    Eigen::VectorXd pfn_feature;
};

}  // namespace

void save_pgm(const ImageF& img, const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write image: " + path.string());
    f << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
    for (Eigen::Index i = 0; i < img.rows(); ++i)
        for (Eigen::Index j = 0; j < img.cols(); ++j) {
            float v = std::min(1.0f, std::max(0.0f, img(i, j)));
            unsigned char byte = static_cast<unsigned char>(v * 255.0f + 0.5f);
            f.write(reinterpret_cast<const char*>(&byte), 1);
        }
}

void record_update(const fs::path& dir, const std::string& key, const std::string& json_value) {
    fs::create_directories(dir);
    fs::path path = dir / "record.json";
    json j = json::object();
    if (fs::exists(path)) {
        std::ifstream f(path);
        f >> j;
    }
    j[key] = json::parse(json_value);
    std::ofstream f(path, std::ios::binary);
    f << j.dump(2) << "\n";
}

std::string record_read(const fs::path& dir) {
    fs::path path = dir / "record.json";
    std::ifstream f(path);
    if (!f) throw io_error("missing run record: " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path cmd_gen_data(const ExperimentConfig& cfg, const LogFn& log) {
    if (log) log("generating dataset under " + cfg.data.root);
    DatasetManifest m = build_dataset(cfg.data);
    if (log)
        log("dataset ready: " + std::to_string(m.objects.size()) + " objects, " +
            std::to_string(m.trials.size()) + " trials");
    return fs::path(m.root) / "manifest";
}

void cmd_train_stage1(const ExperimentConfig& cfg, const LogFn& log) {
    save_run_config(cfg);
    DatasetManifest manifest = manifest_for(cfg);
    ModelBundle bundle(cfg);
    DataCache cache = DataCache::load(manifest);

    StageResult vis = train_vision(bundle, cache, log);
    record_stage(cfg, "vision", vis);
    std::string frozen_vision = bundle.group_hash("vision");

    StageResult s1 = train_stage1(bundle, cache, log);
    record_stage(cfg, "stage1", s1);
    if (bundle.group_hash("vision") != frozen_vision)
        throw validation_error("vision encoder changed during stage 1 (freeze contract)");

    bundle.save_checkpoints(ckpt_dir(cfg));
    record_hashes(cfg, bundle);
}

void cmd_train_stage2(const ExperimentConfig& cfg, const LogFn& log) {
    DatasetManifest manifest = manifest_for(cfg);
    ModelBundle bundle(cfg);
    if (!fs::exists(ckpt_dir(cfg) / "nfe.ckpt"))
        throw config_error("stage 2 requires stage-1 checkpoints under " +
                           ckpt_dir(cfg).string());
    bundle.load_checkpoints(ckpt_dir(cfg));
    DataCache cache = DataCache::load(manifest);
    cache.refresh_view_embeddings(bundle);

    json record = json::parse(record_read(run_dir(cfg)));
    bool has_pretrained = record.contains("stage_vq") && record.contains("stage_ar_base");
    if (!has_pretrained) {
        StageResult vq = train_vq(bundle, cache, log);
        record_stage(cfg, "vq", vq);
        StageResult arb = train_ar_base(bundle, cache, log);
        record_stage(cfg, "ar_base", arb);
    } else {
        cache.refresh_codes(bundle);
    }

    std::string frozen_vq = bundle.group_hash("vq");
    std::string frozen_base = nn::group_hash(bundle.params(), bundle.ar().frozen_base_ids());
    StageResult s2 = train_stage2(bundle, cache, log);
    record_stage(cfg, "stage2", s2);
    if (bundle.group_hash("vq") != frozen_vq)
        throw validation_error("VQ autoencoder changed during stage 2 (freeze contract)");
    if (nn::group_hash(bundle.params(), bundle.ar().frozen_base_ids()) != frozen_base)
        throw validation_error("base decoder blocks changed during stage 2 (freeze contract)");

    bundle.save_checkpoints(ckpt_dir(cfg));
    record_hashes(cfg, bundle);
}

namespace {

MetricReport evaluate_with_bundle(const ModelBundle& bundle, const DatasetManifest& manifest,
                                  const std::string& split, const std::string& method,
                                  const LogFn& log) {
    const auto& cfg = bundle.cfg();
    auto trials = manifest.trials_in_split(split);
    if (trials.empty()) throw argument_error("no trials in split: " + split);

    // ground-truth context per unique object
    std::map<std::string, GtEntry> gt;
    PointFeatureNet pfn(64, 64, derive_seed(manifest.cfg.seed, {0xf9dULL}));
    for (const TrialRef* t : trials) {
        if (gt.count(t->object_id)) continue;
        GtEntry e;
        e.object_id = t->object_id;
        e.voxel = load_trial_voxel(manifest, *t);
        e.mesh = extract_mesh(e.voxel);
        e.renders = eval_renders(e.voxel, cfg.data.view_size);
        e.vis_feature = mean_view_feature(bundle, e.renders);
        e.cloud = sample_points(e.mesh, cfg.eval.points,
                                derive_seed(manifest.cfg.seed, {0x9c1ULL, str_hash(t->object_id)}));
        e.pfn_feature = pfn.features(e.cloud);
        gt.emplace(t->object_id, std::move(e));
    }

    std::vector<std::string> object_order;
    for (const auto& [id, e] : gt) object_order.push_back(id);

    auto evaluate_method = [&](bool control, MetricReport& report) {
        MetricRow row;
        row.method = control ? "ground-truth" : method;
        Eigen::MatrixXd recon_pfn(static_cast<Eigen::Index>(trials.size()), 64);
        Eigen::MatrixXd gt_pfn(static_cast<Eigen::Index>(trials.size()), 64);
        double acc2 = 0, acc10 = 0, accp = 0, accs = 0, accc = 0, acce = 0;
        for (std::size_t ti = 0; ti < trials.size(); ++ti) {
            const TrialRef* t = trials[ti];
            const GtEntry& g = gt.at(t->object_id);
            std::uint64_t rseed = derive_seed(cfg.seed, {0xe7a1ULL, t->trial_seed});

            VoxelGrid recon_voxel;
            Mesh recon_mesh;
            if (control) {
                recon_voxel = g.voxel;
                recon_mesh = g.mesh;
            } else {
                FmriTrial trial = load_trial(manifest, *t);
                ReconOutput out = reconstruct_trial(bundle, trial, rseed);
                recon_voxel = out.voxel;
                recon_mesh = out.mesh;
            }
            std::vector<ImageF> recon_renders =
                control ? g.renders : eval_renders(recon_voxel, cfg.data.view_size);
            Eigen::VectorXd recon_feature =
                control ? g.vis_feature : mean_view_feature(bundle, recon_renders);

            // distractors: ground-truth features of the other objects
            Eigen::MatrixXd pool(static_cast<Eigen::Index>(object_order.size()) - 1,
                                 recon_feature.size());
            Eigen::Index pi = 0;
            for (const auto& id : object_order)
                if (id != t->object_id) pool.row(pi++) = gt.at(id).vis_feature.transpose();

            std::uint64_t nseed = derive_seed(rseed, {0x2a7ULL});
            double two = nway_topk(recon_feature, g.vis_feature, pool, 2, 1,
                                   cfg.eval.nway_trials, nseed);
            double ten = nway_topk(recon_feature, g.vis_feature, pool, 10, 1,
                                   cfg.eval.nway_trials, derive_seed(nseed, {10}));

            double perc = 0, ss = 0;
            for (int v = 0; v < kEvalViews; ++v) {
                perc += perceptual_distance(recon_renders[static_cast<std::size_t>(v)],
                                            g.renders[static_cast<std::size_t>(v)],
                                            bundle.vision());
                ss += ssim(recon_renders[static_cast<std::size_t>(v)],
                           g.renders[static_cast<std::size_t>(v)]);
            }
            perc /= kEvalViews;
            ss /= kEvalViews;

            PointCloud recon_cloud =
                control ? g.cloud
                        : sample_points(recon_mesh, cfg.eval.points,
                                        derive_seed(manifest.cfg.seed,
                                                    {0x9c1ULL, str_hash(t->object_id)}));
            double cd = chamfer(recon_cloud, g.cloud);
            double em = emd_exact(recon_cloud, g.cloud);

            recon_pfn.row(static_cast<Eigen::Index>(ti)) =
                (control ? g.pfn_feature : pfn.features(recon_cloud)).transpose();
            gt_pfn.row(static_cast<Eigen::Index>(ti)) = g.pfn_feature.transpose();

            acc2 += two;
            acc10 += ten;
            accp += perc;
            accs += ss;
            accc += cd;
            acce += em;
            if (!control) {
                ObjectMetrics om;
                om.object_id =
                    t->object_id + (t->session > 0 ? "#s" + std::to_string(t->session) : "");
                om.two_way = two;
                om.ten_way = ten;
                om.perceptual = perc;
                om.ssim = ss;
                om.cd = cd;
                om.emd = em;
                report.per_object.push_back(om);
                if (log && (ti + 1) % 16 == 0)
                    log("evaluated " + std::to_string(ti + 1) + "/" +
                        std::to_string(trials.size()) + " trials");
            }
        }
        const double n = static_cast<double>(trials.size());
        row.two_way = acc2 / n;
        row.ten_way = acc10 / n;
        row.perceptual = accp / n;
        row.ssim = accs / n;
        row.cd = accc / n;
        row.emd = acce / n;
        // FPD is a set-level statistic over per-shape features
        row.fpd = trials.size() >= 2 ? fpd(recon_pfn, gt_pfn) : 0.0;
        report.rows.push_back(row);
    };

    MetricReport report;
    evaluate_method(/*control=*/true, report);
    evaluate_method(/*control=*/false, report);
    return report;
}

}  // namespace

MetricReport cmd_evaluate(const ExperimentConfig& cfg, const std::string& split,
                          const LogFn& log) {
    DatasetManifest manifest = manifest_for(cfg);
    save_run_config(cfg);
    ModelBundle bundle(cfg);
    bundle.load_checkpoints(ckpt_dir(cfg));
    std::string method = "full";
    if (cfg.no_diffusion && cfg.no_contrastive)
        method = "no_both";
    else if (cfg.no_diffusion)
        method = "no_diffusion";
    else if (cfg.no_contrastive)
        method = "no_contrastive";
    MetricReport report = evaluate_with_bundle(bundle, manifest, split, method, log);
    report.save(run_dir(cfg) / ("metrics_" + split + ".csv"));
    json j;
    for (const auto& r : report.rows)
        j[r.method] = {{"2way", r.two_way},   {"10way", r.ten_way}, {"perceptual", r.perceptual},
                       {"ssim", r.ssim},      {"fpd", r.fpd},       {"cd", r.cd},
                       {"emd", r.emd}};
    record_update(run_dir(cfg), "metrics_" + split, j.dump());
    return report;
}

MetricReport cmd_ablate(const ExperimentConfig& base_cfg, const LogFn& log) {
    struct Variant {
        const char* name;
        bool no_diffusion, no_contrastive;
    };
    const Variant variants[] = {{"full", false, false},
                                {"no_diffusion", true, false},
                                {"no_contrastive", false, true},
                                {"no_both", true, true}};

    DatasetManifest manifest = manifest_for(base_cfg);

    // shared components trained once per seed: vision encoder, VQ, base AR
    ExperimentConfig shared_cfg = base_cfg;
    shared_cfg.no_diffusion = false;
    shared_cfg.no_contrastive = false;
    ModelBundle shared(shared_cfg);
    DataCache cache = DataCache::load(manifest);
    if (log) log("training shared components (vision, vq, base decoder)");
    train_vision(shared, cache, log);
    train_vq(shared, cache, log);
    train_ar_base(shared, cache, log);

    auto copy_group = [&](const ModelBundle& from, ModelBundle& to, const std::string& name) {
        const auto& ids_from = from.group_ids(name);
        const auto& ids_to = to.group_ids(name);
        for (std::size_t i = 0; i < ids_from.size(); ++i)
            to.params().value(ids_to[i]) = from.params().value(ids_from[i]);
    };

    MetricReport combined;
    json hashes;
    for (const auto& v : variants) {
        ExperimentConfig cfg = base_cfg;
        cfg.no_diffusion = v.no_diffusion;
        cfg.no_contrastive = v.no_contrastive;
        cfg.out_dir = (run_dir(base_cfg) / "ablate" / v.name).string();
        hashes[v.name] = cfg.config_hash();
        if (log) log(std::string("ablation variant: ") + v.name);

        ModelBundle bundle(cfg);
        copy_group(shared, bundle, "vision");
        copy_group(shared, bundle, "vq");
        copy_group(shared, bundle, "ar");
        cache.refresh_view_embeddings(bundle);
        cache.refresh_codes(bundle);

        StageResult s1 = train_stage1(bundle, cache, log);
        StageResult s2 = train_stage2(bundle, cache, log);
        save_run_config(cfg);
        record_stage(cfg, "stage1", s1);
        record_stage(cfg, "stage2", s2);
        bundle.save_checkpoints(ckpt_dir(cfg));
        record_hashes(cfg, bundle);

        MetricReport r = evaluate_with_bundle(bundle, manifest, "test", v.name, log);
        r.save(run_dir(cfg) / "metrics_test.csv");
        for (auto& row : r.rows)
            if (row.method == v.name) combined.rows.push_back(row);
    }
    combined.save(run_dir(base_cfg) / "ablate_report.csv");
    record_update(run_dir(base_cfg), "ablate_config_hashes", hashes.dump());
    return combined;
}

std::map<std::string, MetricReport> cmd_ood(const ExperimentConfig& cfg, const LogFn& log) {
    DatasetManifest manifest = manifest_for(cfg);
    ModelBundle bundle(cfg);
    bundle.load_checkpoints(ckpt_dir(cfg));
    std::map<std::string, MetricReport> out;
    for (const std::string split : {"ap", "apac"}) {
        if (log) log("evaluating out-of-distribution split: " + split);
        MetricReport r = evaluate_with_bundle(bundle, manifest, split, "full", log);
        r.save(run_dir(cfg) / ("metrics_" + split + ".csv"));
        out.emplace(split, std::move(r));
    }
    return out;
}

std::string RoiAnalysis::text() const {
    std::ostringstream os;
    os << "ROI encoding analysis (ridge regression, per-pixel Pearson r on test)\n";
    for (const auto& v : variants) {
        os.precision(4);
        os << "  " << v.name << ": lambda=" << v.lambda << " inside=" << v.inside
           << " outside=" << v.outside << " mean_r=" << v.mean_r << "\n";
    }
    return os.str();
}

RoiAnalysis cmd_analyze(const ExperimentConfig& cfg, const LogFn& log) {
    DatasetManifest manifest = manifest_for(cfg);
    ModelBundle bundle(cfg);
    bundle.load_checkpoints(ckpt_dir(cfg));

    auto trial_target = [&](const FmriTrial& trial) {
        // mean of the middle-six frames, flattened row-major
        Eigen::VectorXd y = Eigen::VectorXd::Zero(
            static_cast<Eigen::Index>(cfg.data.frame_size) * cfg.data.frame_size);
        for (int idx : select_frames(static_cast<int>(trial.frames.size()), FrameSelectMode::Eval,
                                     0)) {
            const ImageF& f = trial.frames[static_cast<std::size_t>(idx)];
            for (int i = 0; i < f.rows(); ++i)
                for (int j = 0; j < f.cols(); ++j)
                    y(static_cast<Eigen::Index>(i) * f.cols() + j) += f(i, j);
        }
        return y / 6.0;
    };

    auto features_for = [&](const TrialRef& t, const FmriTrial& trial, const std::string& kind) {
        std::vector<ImageF> frames;
        for (int idx : select_frames(static_cast<int>(trial.frames.size()), FrameSelectMode::Eval,
                                     0))
            frames.push_back(trial.frames[static_cast<std::size_t>(idx)]);
        LatentFeature<float> cf = bundle.compute_cf(frames);
        if (kind == "c_f") return Eigen::VectorXd(cf.pooled.row(0).cast<double>());
        if (kind == "c_v") {
            VoxelGrid voxel = load_trial_voxel(manifest, t);
            return mean_view_feature(bundle, eval_renders(voxel, cfg.data.view_size));
        }
        // generated vision latent
        if (cfg.no_diffusion) return Eigen::VectorXd(cf.pooled.row(0).cast<double>());
        ag::Mat<float> tokens = ddpm_sample(bundle.denoiser(), bundle.schedule(), cf.tokens,
                                            derive_seed(cfg.seed, {0xa31ULL, t.trial_seed}));
        return Eigen::VectorXd(tokens.colwise().mean().cast<double>());
    };

    auto trials_of = [&](const std::string& split) { return manifest.trials_in_split(split); };
    auto train_trials = trials_of("train");
    auto test_trials = trials_of("test");
    if (train_trials.empty() || test_trials.empty())
        throw argument_error("analysis requires train and test trials");

    const std::string subject = train_trials.front()->subject;
    ImageF roi = load_subject_roi(manifest, subject);

    RoiAnalysis out;
    for (const std::string kind : {"c_f", "c_v", "c_v_hat"}) {
        if (log) log("encoding analysis for " + kind);
        Eigen::MatrixXd x_train, y_train, x_test, y_test;
        for (auto* sets : {&train_trials, &test_trials}) {
            bool is_train = sets == &train_trials;
            Eigen::MatrixXd x(static_cast<Eigen::Index>(sets->size()), 0);
            Eigen::MatrixXd y(static_cast<Eigen::Index>(sets->size()),
                              static_cast<Eigen::Index>(cfg.data.frame_size) *
                                  cfg.data.frame_size);
            for (std::size_t i = 0; i < sets->size(); ++i) {
                const TrialRef* t = (*sets)[i];
                FmriTrial trial = load_trial(manifest, *t);
                Eigen::VectorXd f = features_for(*t, trial, kind);
                if (x.cols() == 0) x.resize(static_cast<Eigen::Index>(sets->size()), f.size());
                x.row(static_cast<Eigen::Index>(i)) = f.transpose();
                y.row(static_cast<Eigen::Index>(i)) = trial_target(trial).transpose();
            }
            (is_train ? x_train : x_test) = std::move(x);
            (is_train ? y_train : y_test) = std::move(y);
        }

        RoiAnalysis::Variant best;
        best.name = kind;
        bool first = true;
        for (double lambda : {0.1, 1.0, 10.0}) {
            Eigen::MatrixXd w = ridge_fit(x_train, y_train, lambda);
            Eigen::MatrixXd pred = x_test * w;
            Eigen::VectorXd r = pearson_map(pred, y_test);
            auto [inside, outside] = roi_contrast(r, roi);
            double mean_r = r.mean();
            if (first || mean_r > best.mean_r) {
                best.lambda = lambda;
                best.inside = inside;
                best.outside = outside;
                best.mean_r = mean_r;
                first = false;
            }
        }
        out.variants.push_back(best);
    }

    std::ofstream f(run_dir(cfg) / "analyze.txt", std::ios::binary);
    f << out.text();
    json j;
    for (const auto& v : out.variants)
        j[v.name] = {{"lambda", v.lambda}, {"inside", v.inside}, {"outside", v.outside},
                     {"mean_r", v.mean_r}};
    record_update(run_dir(cfg), "roi_analysis", j.dump());
    return out;
}

void cmd_report(const fs::path& dir, const LogFn& log) {
    if (!fs::exists(dir)) throw io_error("run directory does not exist: " + dir.string());
    bool any = false;
    std::ostringstream tables;
    for (const auto& entry : fs::directory_iterator(dir)) {
        fs::path p = entry.path();
        bool metric_csv = p.extension() == ".csv" &&
                          (p.filename().string().rfind("metrics_", 0) == 0 ||
                           p.filename().string() == "ablate_report.csv");
        if (!metric_csv) continue;
        MetricReport r = MetricReport::load_csv(p);
        tables << p.filename().string() << "\n" << r.to_text() << "\n";
        any = true;
    }
    if (!any) throw io_error("no metric CSVs found under " + dir.string());
    std::ofstream f(dir / "report.txt", std::ios::binary);
    f << tables.str();
    if (log) log(tables.str());

    // GT-vs-reconstruction view grids for a handful of test objects
    fs::path cfg_path = dir / "config.cfg";
    if (fs::exists(cfg_path)) {
        ExperimentConfig cfg = ExperimentConfig::desk();
        cfg.apply(ConfigFile::parse_file(cfg_path));
        if (!cfg.data.root.empty() && fs::exists(fs::path(cfg.data.root) / "manifest") &&
            fs::exists(dir / "checkpoints" / "nfe.ckpt")) {
            DatasetManifest manifest = load_manifest(cfg.data.root);
            ModelBundle bundle(cfg);
            bundle.load_checkpoints(dir / "checkpoints");
            auto tests = manifest.trials_in_split("test");
            int count = std::min<std::size_t>(4, tests.size());
            for (int i = 0; i < count; ++i) {
                const TrialRef* t = tests[static_cast<std::size_t>(i)];
                FmriTrial trial = load_trial(manifest, *t);
                ReconOutput out = reconstruct_trial(bundle, trial,
                                                    derive_seed(cfg.seed, {0xe7a1ULL, t->trial_seed}));
                auto gt_views = eval_renders(load_trial_voxel(manifest, *t), cfg.data.view_size);
                auto recon_views = eval_renders(out.voxel, cfg.data.view_size);
                const int s = cfg.data.view_size;
                ImageF grid(2 * s, kEvalViews * s);  // rows: GT, reconstruction
                for (int v = 0; v < kEvalViews; ++v) {
                    grid.block(0, v * s, s, s) = gt_views[static_cast<std::size_t>(v)];
                    grid.block(s, v * s, s, s) = recon_views[static_cast<std::size_t>(v)];
                }
                save_pgm(grid, dir / ("compare_" + t->object_id + ".pgm"));
            }
            if (log) log("wrote " + std::to_string(count) + " comparison grids");
        }
    }
}

}  // namespace recon3d
