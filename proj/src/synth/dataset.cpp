#include "recon3d/synth/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "recon3d/common/error.hpp"
#include "recon3d/common/hash.hpp"
#include "recon3d/common/rng.hpp"
#include "recon3d/io/f32_image.hpp"
#include "recon3d/io/voxel_io.hpp"

namespace recon3d {

namespace fs = std::filesystem;

DatasetConfig DatasetConfig::paper_scale() {
    DatasetConfig cfg;
    cfg.categories = 13;
    cfg.apac_categories = 42;  // 55 total categories, core ones held out of APAC
    cfg.train_per_category = 100;
    cfg.test_per_category = 8;
    cfg.apac_per_category = 4;
    cfg.core_subjects = 8;
    cfg.ap_subjects = 2;
    cfg.apac_subjects = 4;
    cfg.views_per_object = 192;
    cfg.test_sessions = 2;  // test objects are viewed twice
    cfg.ood_noise_std = 0.05f;
    return cfg;
}

namespace {

std::uint64_t str_seed(const std::string& s) {
    Fnv64 h;
    h.update(s);
    return h.digest();
}

std::string object_name(int class_id, int index) {
    std::ostringstream os;
    os << category_name(class_id) << '_' << (index < 100 ? (index < 10 ? "00" : "0") : "")
       << index;
    return os.str();
}

std::string trial_dir(const TrialRef& t) {
    std::string d = t.split + "/" + t.subject + "/" + t.object_id;
    if (t.session > 0) d += "_s" + std::to_string(t.session);
    return d;
}

std::string fmt_float(float v) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

}  // namespace

std::vector<const TrialRef*> DatasetManifest::trials_in_split(const std::string& split) const {
    std::vector<const TrialRef*> out;
    for (const auto& t : trials)
        if (t.split == split) out.push_back(&t);
    return out;
}

const ObjectRef& DatasetManifest::object(const std::string& object_id) const {
    for (const auto& o : objects)
        if (o.object_id == object_id) return o;
    throw argument_error("unknown object id: " + object_id);
}

const SubjectInfo& DatasetManifest::subject(const std::string& id) const {
    for (const auto& s : subjects)
        if (s.id == id) return s;
    throw argument_error("unknown subject id: " + id);
}

DatasetManifest plan_dataset(const DatasetConfig& cfg) {
    if (cfg.categories < 1) throw config_error("dataset needs at least one category");
    if (cfg.train_per_category < 1 || cfg.test_per_category < 1)
        throw config_error("per-category train/test counts must be positive");

    DatasetManifest m;
    m.root = cfg.root;
    m.cfg = cfg;

    const int total_categories = cfg.categories + cfg.apac_categories;
    for (int c = 0; c < total_categories; ++c) m.category_names.push_back(category_name(c));

    int subject_counter = 1;
    auto add_subject = [&](const std::string& role, float noise) {
        SubjectInfo s;
        std::ostringstream os;
        os << "sub-" << (subject_counter < 10 ? "0" : "") << subject_counter;
        ++subject_counter;
        s.id = os.str();
        s.role = role;
        s.noise_std = noise;
        s.seed = derive_seed(cfg.seed, {0x5ab7ec7ULL, str_seed(s.id)});
        m.subjects.push_back(s);
    };
    for (int i = 0; i < cfg.core_subjects; ++i) add_subject("core", cfg.core_noise_std);
    for (int i = 0; i < cfg.ap_subjects; ++i) add_subject("ap", cfg.ood_noise_std);
    for (int i = 0; i < cfg.apac_subjects; ++i) add_subject("apac", cfg.ood_noise_std);

    // Core objects: train indices first, then test indices.
    for (int c = 0; c < cfg.categories; ++c) {
        for (int i = 0; i < cfg.train_per_category + cfg.test_per_category; ++i) {
            ObjectRef o;
            o.object_id = object_name(c, i);
            o.class_id = c;
            o.object_seed = derive_seed(cfg.seed, {0x0b1ec7ULL, str_seed(o.object_id)});
            o.partition = i < cfg.train_per_category ? "core-train" : "core-test";
            m.objects.push_back(o);
        }
    }
    // APAC objects live in held-out categories.
    for (int c = cfg.categories; c < total_categories; ++c) {
        for (int i = 0; i < cfg.apac_per_category; ++i) {
            ObjectRef o;
            o.object_id = object_name(c, i);
            o.class_id = c;
            o.object_seed = derive_seed(cfg.seed, {0x0b1ec7ULL, str_seed(o.object_id)});
            o.partition = "apac";
            m.objects.push_back(o);
        }
    }

    auto add_trial = [&](const std::string& split, const SubjectInfo& s, const ObjectRef& o,
                         int session) {
        TrialRef t;
        t.split = split;
        t.subject = s.id;
        t.object_id = o.object_id;
        t.class_id = o.class_id;
        t.session = session;
        t.trial_seed = derive_seed(
            cfg.seed, {0x791a1ULL, str_seed(s.id), str_seed(o.object_id),
                       static_cast<std::uint64_t>(session)});
        t.rel_dir = trial_dir(t);
        m.trials.push_back(t);
    };

    for (const auto& s : m.subjects) {
        if (s.role == "core") {
            for (const auto& o : m.objects) {
                if (o.partition == "core-train") add_trial("train", s, o, 0);
                if (o.partition == "core-test")
                    for (int sess = 0; sess < cfg.test_sessions; ++sess)
                        add_trial("test", s, o, sess);
            }
        } else if (s.role == "ap") {
            // AP subjects view the Core test objects with their own forward model
            for (const auto& o : m.objects)
                if (o.partition == "core-test") add_trial("ap", s, o, 0);
        } else {
            for (const auto& o : m.objects)
                if (o.partition == "apac") add_trial("apac", s, o, 0);
        }
    }
    return m;
}

std::string manifest_text(const DatasetManifest& m) {
    std::ostringstream os;
    os << "# recon3d dataset manifest v1\n";
    os << "seed " << m.cfg.seed << "\n";
    os << "categories " << m.cfg.categories << "\n";
    os << "apac_categories " << m.cfg.apac_categories << "\n";
    os << "train_per_category " << m.cfg.train_per_category << "\n";
    os << "test_per_category " << m.cfg.test_per_category << "\n";
    os << "apac_per_category " << m.cfg.apac_per_category << "\n";
    os << "views_per_object " << m.cfg.views_per_object << "\n";
    os << "view_size " << m.cfg.view_size << "\n";
    os << "frame_size " << m.cfg.frame_size << "\n";
    os << "voxel_resolution " << m.cfg.voxel_resolution << "\n";
    os << "test_sessions " << m.cfg.test_sessions << "\n";
    os << "core_noise_std " << fmt_float(m.cfg.core_noise_std) << "\n";
    os << "ood_noise_std " << fmt_float(m.cfg.ood_noise_std) << "\n";
    for (std::size_t c = 0; c < m.category_names.size(); ++c)
        os << "category " << c << ' ' << m.category_names[c] << "\n";
    for (const auto& s : m.subjects)
        os << "subject " << s.id << ' ' << s.role << ' ' << s.seed << ' '
           << fmt_float(s.noise_std) << "\n";
    for (const auto& o : m.objects)
        os << "object " << o.object_id << ' ' << o.class_id << ' ' << o.object_seed << ' '
           << o.partition << "\n";
    for (const auto& t : m.trials)
        os << "trial " << t.split << ' ' << t.subject << ' ' << t.object_id << ' ' << t.class_id
           << ' ' << t.session << ' ' << t.trial_seed << ' ' << t.rel_dir << "\n";
    return os.str();
}

ShapeSpec object_spec(const DatasetManifest&, const ObjectRef& obj) {
    return make_object_spec(obj.class_id, obj.object_seed);
}

DatasetManifest build_dataset(const DatasetConfig& cfg) {
    if (cfg.root.empty()) throw config_error("dataset root path is empty");
    DatasetManifest m = plan_dataset(cfg);
    fs::path root(cfg.root);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw io_error("cannot create dataset root: " + cfg.root);

    // forward models (one per subject), persisted ROI masks
    std::map<std::string, BrainForwardModel> models;
    for (const auto& s : m.subjects) {
        models.emplace(s.id, BrainForwardModel::make(s.id, s.seed, s.noise_std, cfg.frame_size));
        fs::path sdir = root / "subjects" / s.id;
        fs::create_directories(sdir);
        save_f32_image(models.at(s.id).roi_mask(), sdir / "roi_mask.f32");
    }

    // Generate per object once, reuse across subjects/sessions.
    std::map<std::string, const ObjectRef*> object_by_id;
    for (const auto& o : m.objects) object_by_id[o.object_id] = &o;

    std::string current_object;
    VoxelGrid grid;
    ViewSet views;
    auto ensure_object = [&](const std::string& object_id) {
        if (current_object == object_id) return;
        const ObjectRef* o = object_by_id.at(object_id);
        grid = generate_shape(make_object_spec(o->class_id, o->object_seed), cfg.voxel_resolution);
        views = render_views(grid, cfg.views_per_object, 60.0, cfg.view_size);
        current_object = object_id;
    };

    // Group trials by object so each shape is rendered once.
    std::vector<const TrialRef*> order;
    for (const auto& t : m.trials) order.push_back(&t);
    std::stable_sort(order.begin(), order.end(),
                     [](const TrialRef* a, const TrialRef* b) { return a->object_id < b->object_id; });

    for (const TrialRef* t : order) {
        ensure_object(t->object_id);
        fs::path dir = root / t->rel_dir;
        fs::create_directories(dir / "views");
        save_voxel(grid, dir / "voxel.bin");
        for (std::size_t i = 0; i < views.images.size(); ++i)
            save_f32_image(views.images[i], dir / "views" / ("view_" + std::to_string(i) + ".f32"));
        FmriTrial trial = models.at(t->subject).simulate(views, t->trial_seed);
        for (int f = 0; f < kFramesPerTrial; ++f) {
            std::ostringstream name;
            name << "frame_" << (f < 10 ? "0" : "") << f << ".f32";
            save_f32_image(trial.frames[static_cast<std::size_t>(f)], dir / name.str());
        }
    }

    std::ofstream mf(root / "manifest", std::ios::binary);
    if (!mf) throw io_error("cannot write manifest under " + cfg.root);
    mf << manifest_text(m);
    return m;
}

DatasetManifest load_manifest(const fs::path& root) {
    std::ifstream f(root / "manifest");
    if (!f) throw io_error("cannot read manifest under " + root.string());
    DatasetManifest m;
    m.root = root.string();
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string key;
        is >> key;
        if (key == "seed") is >> m.cfg.seed;
        else if (key == "categories") is >> m.cfg.categories;
        else if (key == "apac_categories") is >> m.cfg.apac_categories;
        else if (key == "train_per_category") is >> m.cfg.train_per_category;
        else if (key == "test_per_category") is >> m.cfg.test_per_category;
        else if (key == "apac_per_category") is >> m.cfg.apac_per_category;
        else if (key == "views_per_object") is >> m.cfg.views_per_object;
        else if (key == "view_size") is >> m.cfg.view_size;
        else if (key == "frame_size") is >> m.cfg.frame_size;
        else if (key == "voxel_resolution") is >> m.cfg.voxel_resolution;
        else if (key == "test_sessions") is >> m.cfg.test_sessions;
        else if (key == "core_noise_std") is >> m.cfg.core_noise_std;
        else if (key == "ood_noise_std") is >> m.cfg.ood_noise_std;
        else if (key == "category") {
            int idx;
            std::string name;
            is >> idx >> name;
            m.category_names.push_back(name);
        } else if (key == "subject") {
            SubjectInfo s;
            is >> s.id >> s.role >> s.seed >> s.noise_std;
            m.subjects.push_back(s);
        } else if (key == "object") {
            ObjectRef o;
            is >> o.object_id >> o.class_id >> o.object_seed >> o.partition;
            m.objects.push_back(o);
        } else if (key == "trial") {
            TrialRef t;
            is >> t.split >> t.subject >> t.object_id >> t.class_id >> t.session >> t.trial_seed >>
                t.rel_dir;
            m.trials.push_back(t);
        } else {
            throw io_error("unknown manifest key: " + key);
        }
        if (is.fail()) throw io_error("malformed manifest line: " + line);
    }
    m.cfg.root = m.root;
    // invariant: every referenced trial directory has its first frame file
    for (const auto& t : m.trials) {
        fs::path p = root / t.rel_dir / "frame_00.f32";
        if (!fs::exists(p)) throw io_error("manifest references missing trial data: " + p.string());
    }
    return m;
}

VoxelGrid load_trial_voxel(const DatasetManifest& m, const TrialRef& t) {
    return load_voxel(fs::path(m.root) / t.rel_dir / "voxel.bin");
}

ViewSet load_trial_views(const DatasetManifest& m, const TrialRef& t) {
    ViewSet v;
    v.pitch_deg = 60.0;
    for (int i = 0; i < m.cfg.views_per_object; ++i) {
        v.images.push_back(
            load_f32_image(fs::path(m.root) / t.rel_dir / "views" / ("view_" + std::to_string(i) + ".f32")));
        v.azimuths_deg.push_back(i * (360.0 / m.cfg.views_per_object));
    }
    return v;
}

FmriTrial load_trial(const DatasetManifest& m, const TrialRef& t) {
    FmriTrial trial;
    trial.subject_id = t.subject;
    trial.object_id = t.object_id;
    trial.class_id = t.class_id;
    trial.split = t.split;
    trial.session = t.session;
    for (int f = 0; f < kFramesPerTrial; ++f) {
        std::ostringstream name;
        name << "frame_" << (f < 10 ? "0" : "") << f << ".f32";
        trial.frames.push_back(load_f32_image(fs::path(m.root) / t.rel_dir / name.str()));
    }
    return trial;
}

ImageF load_subject_roi(const DatasetManifest& m, const std::string& subject_id) {
    return load_f32_image(fs::path(m.root) / "subjects" / subject_id / "roi_mask.f32");
}

}  // namespace recon3d
