#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "recon3d/synth/forward_model.hpp"
#include "recon3d/synth/shape.hpp"

namespace recon3d {

/// Dataset generation parameters. The desk defaults train end to end in
/// minutes; `paper_scale()` mirrors the published acquisition counts and is
/// used for planning arithmetic only.
struct DatasetConfig {
    std::string root;
    int categories = 13;
    int apac_categories = 4;
    int train_per_category = 20;
    int test_per_category = 4;
    int apac_per_category = 4;
    int core_subjects = 1;
    int ap_subjects = 1;
    int apac_subjects = 1;
    int views_per_object = 12;
    int view_size = 224;
    int frame_size = 256;
    int voxel_resolution = 32;
    int test_sessions = 1;
    float core_noise_std = 0.0f;
    float ood_noise_std = 0.05f;
    std::uint64_t seed = 42;

    static DatasetConfig paper_scale();
};

struct SubjectInfo {
    std::string id;
    std::string role;  // core | ap | apac
    std::uint64_t seed = 0;
    float noise_std = 0.0f;
};

struct ObjectRef {
    std::string object_id;
    int class_id = 0;
    std::uint64_t object_seed = 0;
    std::string partition;  // core-train | core-test | apac
};

struct TrialRef {
    std::string split;  // train | test | ap | apac
    std::string subject;
    std::string object_id;
    int class_id = 0;
    int session = 0;
    std::uint64_t trial_seed = 0;
    std::string rel_dir;  // trial directory relative to root
};

struct DatasetManifest {
    std::string root;
    DatasetConfig cfg;
    std::vector<std::string> category_names;
    std::vector<SubjectInfo> subjects;
    std::vector<ObjectRef> objects;
    std::vector<TrialRef> trials;

    std::vector<const TrialRef*> trials_in_split(const std::string& split) const;
    const ObjectRef& object(const std::string& object_id) const;
    const SubjectInfo& subject(const std::string& id) const;
};

/// Pure planning step: ids, seeds, splits, paths. No file I/O.
DatasetManifest plan_dataset(const DatasetConfig& cfg);

/// Plans, writes every trial directory plus `<root>/manifest`, returns the
/// manifest. Rebuilding with the same config is byte-identical.
DatasetManifest build_dataset(const DatasetConfig& cfg);

DatasetManifest load_manifest(const std::filesystem::path& root);

ShapeSpec object_spec(const DatasetManifest& m, const ObjectRef& obj);
VoxelGrid load_trial_voxel(const DatasetManifest& m, const TrialRef& t);
ViewSet load_trial_views(const DatasetManifest& m, const TrialRef& t);
FmriTrial load_trial(const DatasetManifest& m, const TrialRef& t);
ImageF load_subject_roi(const DatasetManifest& m, const std::string& subject_id);

/// Serialized manifest text (stable formatting; used for byte-identity checks).
std::string manifest_text(const DatasetManifest& m);

}  // namespace recon3d
