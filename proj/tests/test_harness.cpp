#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "recon3d/harness/experiments.hpp"
#include "recon3d/nn/checkpoint.hpp"

using namespace recon3d;
namespace fs = std::filesystem;

namespace {

// Micro preset: trains in seconds, exercises every pipeline surface.
ExperimentConfig micro_config(const fs::path& root, const fs::path& out) {
    ExperimentConfig cfg = ExperimentConfig::desk();
    cfg.data.root = root.string();
    cfg.data.categories = 3;
    cfg.data.apac_categories = 1;
    cfg.data.train_per_category = 2;
    cfg.data.test_per_category = 4;
    cfg.data.apac_per_category = 2;
    cfg.data.views_per_object = 4;
    cfg.data.view_size = 64;
    cfg.data.frame_size = 64;
    cfg.data.voxel_resolution = 16;
    cfg.data.seed = 9;

    cfg.frame_encoder = PatchTransformerConfig{64, 16, 32, 1, 2, 2.0};
    cfg.fa = AggregatorConfig{6, 32, 4, 16, 1, 2, 2.0};
    cfg.vision.vit = PatchTransformerConfig{64, 32, 32, 1, 2, 2.0};
    cfg.vision.out_dim = 16;
    cfg.fbdm = DenoiserConfig{16, 1, 2, 4, 16, 2.0};
    cfg.timesteps = 10;
    cfg.vq = VqConfig{16, 4, 32, 8, 16, 0.25};
    cfg.ar.width = 32;
    cfg.ar.depth = 2;
    cfg.ar.heads = 2;
    cfg.ar.adapter_period = 2;
    cfg.n_view_frames = 4;

    cfg.train.vision = {2, 2e-3, 8};
    cfg.train.stage1 = {2, 2e-3, 4};
    cfg.train.vq = {3, 3e-3, 4};
    cfg.train.ar_base = {2, 2e-3, 4};
    cfg.train.stage2 = {1, 1e-3, 4};
    cfg.eval.points = 128;
    cfg.eval.nway_trials = 50;
    cfg.seed = 5;
    cfg.out_dir = out.string();
    cfg.link();
    return cfg;
}

struct MicroFixture {
    fs::path base = fs::temp_directory_path() / "recon3d_harness_test";
    ExperimentConfig cfg;

    MicroFixture() : cfg(micro_config(base / "data", base / "run")) {
        if (!fs::exists(base / "data" / "manifest")) {
            fs::create_directories(base);
            cmd_gen_data(cfg, nullptr);
        }
    }
};

}  // namespace

TEST_CASE("config files parse, serialize and reject malformed input") {
    std::string text =
        "# comment\n[data]\ncategories = 5\nroot = /tmp/x\n\n[run]\nno_diffusion = true\n";
    ConfigFile f = ConfigFile::parse_string(text);
    CHECK(f.get_int("data", "categories", 0) == 5);
    CHECK(f.get("data", "root", "") == "/tmp/x");
    CHECK(f.get_bool("run", "no_diffusion", false));
    CHECK(f.get_int("data", "missing", 7) == 7);

    ConfigFile back = ConfigFile::parse_string(f.serialize());
    CHECK(back.get_int("data", "categories", 0) == 5);

    CHECK_THROWS_AS(ConfigFile::parse_string("[bad\nk = v\n"), config_error);
    CHECK_THROWS_AS(ConfigFile::parse_string("[s]\nnot a pair\n"), config_error);
    ConfigFile bad = ConfigFile::parse_string("[s]\nk = abc\n");
    CHECK_THROWS_AS(bad.get_int("s", "k", 0), config_error);
}

TEST_CASE("experiment presets: linked dimensions and published paper-scale values") {
    ExperimentConfig desk = ExperimentConfig::desk();
    CHECK(desk.fa.lc == 16);
    CHECK(desk.fa.dc == 128);
    CHECK(desk.ar.code_len == 512);  // 8^3 latent cells
    CHECK(desk.vq.latent_grid() == 8);
    CHECK(desk.ar.vocab == desk.vq.codebook_size);

    ExperimentConfig paper = ExperimentConfig::paper_scale();
    CHECK(paper.frame_encoder.patch == 16);
    CHECK(paper.frame_encoder.dim == 1024);
    CHECK(paper.frame_encoder.depth == 24);
    CHECK(paper.frame_encoder.heads == 16);
    CHECK(paper.fbdm.width == 512);
    CHECK(paper.fbdm.depth == 6);
    CHECK(paper.fbdm.heads == 8);
    CHECK(paper.timesteps == 100);
    CHECK(paper.vq.codebook_size == 8192);
    CHECK(paper.vq.code_dim == 512);
    CHECK(paper.ar.width == 3072);
    CHECK(paper.ar.depth == 32);
    CHECK(paper.ar.heads == 16);
    CHECK(paper.ar.max_seq == 1027);
    CHECK(paper.data.train_per_category == 100);
    CHECK(paper.data.test_per_category == 8);

    // config text round-trips through the parser
    ExperimentConfig copy = ExperimentConfig::desk();
    copy.apply(ConfigFile::parse_string(desk.to_config_text()));
    CHECK(copy.config_hash() == desk.config_hash());

    // hash separates ablation flags
    ExperimentConfig flagged = desk;
    flagged.no_diffusion = true;
    CHECK(flagged.config_hash() != desk.config_hash());
}

TEST_CASE("micro pipeline: training stages, checkpoints, determinism") {
    MicroFixture fx;
    DatasetManifest manifest = load_manifest(fx.cfg.data.root);
    CHECK(manifest.objects.size() == 3u * 6 + 2);  // core plus apac
    CHECK(manifest.trials_in_split("train").size() == 6);
    CHECK(manifest.trials_in_split("test").size() == 12);
    CHECK(manifest.trials_in_split("ap").size() == 12);
    CHECK(manifest.trials_in_split("apac").size() == 2);

    ModelBundle bundle(fx.cfg);
    DataCache cache = DataCache::load(manifest);

    // vision training decreases the classifier loss
    StageResult vis = train_vision(bundle, cache, nullptr);
    REQUIRE(vis.epoch_losses.size() == 2);
    CHECK(vis.epoch_losses.back() < vis.epoch_losses.front());

    std::string vision_hash = bundle.group_hash("vision");
    StageResult s1 = train_stage1(bundle, cache, nullptr);
    CHECK(bundle.group_hash("vision") == vision_hash);  // frozen contract
    REQUIRE(s1.epoch_losses.size() == 2);

    StageResult vq = train_vq(bundle, cache, nullptr);
    CHECK(vq.epoch_losses.back() < vq.epoch_losses.front());
    StageResult arb = train_ar_base(bundle, cache, nullptr);
    CHECK(arb.epoch_losses.back() < arb.epoch_losses.front());

    std::string vq_hash = bundle.group_hash("vq");
    std::string base_hash = nn::group_hash(bundle.params(), bundle.ar().frozen_base_ids());
    train_stage2(bundle, cache, nullptr);
    CHECK(bundle.group_hash("vq") == vq_hash);  // stage-2 freeze contracts
    CHECK(nn::group_hash(bundle.params(), bundle.ar().frozen_base_ids()) == base_hash);

    // checkpoints round-trip through disk
    fs::path ckpts = fx.base / "run" / "checkpoints";
    bundle.save_checkpoints(ckpts);
    ModelBundle loaded(fx.cfg);
    loaded.load_checkpoints(ckpts);
    for (const auto& name : bundle.group_names())
        CHECK(loaded.group_hash(name) == bundle.group_hash(name));

    // end-to-end reconstruction: deterministic, coordinates in bounds
    FmriTrial trial = load_trial(manifest, *manifest.trials_in_split("test").front());
    ReconOutput a = reconstruct_trial(bundle, trial, 42);
    ReconOutput b = reconstruct_trial(bundle, trial, 42);
    CHECK(a.codes.codes == b.codes.codes);
    CHECK(a.voxel.occupancy == b.voxel.occupancy);
    REQUIRE(!a.mesh.vertices.empty());
    for (const auto& v : a.mesh.vertices)
        for (int c = 0; c < 3; ++c) {
            CHECK(v[c] >= -1.0f);
            CHECK(v[c] <= 1.0f);
        }
    ReconOutput c = reconstruct_trial(bundle, trial, 43);
    CHECK(a.cv_hat.tokens != c.cv_hat.tokens);  // seed actually matters
}

TEST_CASE("micro evaluation: control row identities and CSV determinism") {
    MicroFixture fx;
    // reuse checkpoints from the training test when present, else train quickly
    fs::path ckpts = fx.base / "run" / "checkpoints";
    DatasetManifest manifest = load_manifest(fx.cfg.data.root);
    if (!fs::exists(ckpts / "nfe.ckpt")) {
        ModelBundle bundle(fx.cfg);
        DataCache cache = DataCache::load(manifest);
        train_vision(bundle, cache, nullptr);
        train_vq(bundle, cache, nullptr);
        bundle.save_checkpoints(ckpts);
    }

    MetricReport r1 = cmd_evaluate(fx.cfg, "test", nullptr);
    REQUIRE(r1.rows.size() == 2);
    CHECK(r1.rows[0].method == "ground-truth");
    CHECK(r1.rows[0].cd == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r1.rows[0].emd == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r1.rows[0].fpd == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r1.rows[0].perceptual == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r1.rows[0].ssim == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r1.rows[0].two_way == doctest::Approx(1.0));
    CHECK(r1.rows[1].method == "full");
    CHECK(r1.per_object.size() == 12);

    // repeat run: byte-identical CSV
    std::ifstream f1(fx.base / "run" / "metrics_test.csv", std::ios::binary);
    std::stringstream s1;
    s1 << f1.rdbuf();
    cmd_evaluate(fx.cfg, "test", nullptr);
    std::ifstream f2(fx.base / "run" / "metrics_test.csv", std::ios::binary);
    std::stringstream s2;
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(!s1.str().empty());
}

TEST_CASE("report renders tables and comparison grids; errors are clear") {
    MicroFixture fx;
    fs::path run = fx.base / "run";
    if (!fs::exists(run / "metrics_test.csv")) {
        MetricReport r;
        r.rows.push_back({"full", 0.839, 0.432, 0.230, 0.734, 3.157, 1.742, 3.833});
        fs::create_directories(run);
        r.save(run / "metrics_test.csv");
    }
    cmd_report(run, nullptr);
    std::ifstream f(run / "report.txt");
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str().find("metrics_test.csv") != std::string::npos);

    // comparison grids: 6 views wide, methods (GT + reconstruction) tall
    bool found_grid = false;
    for (const auto& e : fs::directory_iterator(run)) {
        if (e.path().filename().string().rfind("compare_", 0) != 0) continue;
        std::ifstream g(e.path(), std::ios::binary);
        std::string magic;
        int w = 0, h = 0;
        g >> magic >> w >> h;
        CHECK(magic == "P5");
        CHECK(w == 6 * fx.cfg.data.view_size);
        CHECK(h == 2 * fx.cfg.data.view_size);
        found_grid = true;
        break;
    }
    CHECK(found_grid);

    CHECK_THROWS_AS(cmd_report(fx.base / "no_such_dir", nullptr), io_error);
}

TEST_CASE("run records accumulate keys as JSON") {
    fs::path dir = fs::temp_directory_path() / "recon3d_record_test";
    fs::remove_all(dir);
    record_update(dir, "alpha", "{\"x\": 1}");
    record_update(dir, "beta", "[1, 2, 3]");
    std::string text = record_read(dir);
    CHECK(text.find("alpha") != std::string::npos);
    CHECK(text.find("beta") != std::string::npos);
    fs::remove_all(dir);
}
