#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace recon3d {

/// One aggregate row per method, column order as reported:
/// 2-way, 10-way, perceptual, SSIM, FPD, CD, EMD. Paper scalings are
/// already applied inside the individual metrics (FPD x0.1, CD and
/// EMD x100).
struct MetricRow {
    std::string method;
    double two_way = 0, ten_way = 0, perceptual = 0, ssim = 0, fpd = 0, cd = 0, emd = 0;
};

struct ObjectMetrics {
    std::string object_id;
    double two_way = 0, ten_way = 0, perceptual = 0, ssim = 0, cd = 0, emd = 0;
};

struct MetricReport {
    std::vector<MetricRow> rows;
    std::vector<ObjectMetrics> per_object;  // detail for the last-added method

    std::string to_csv() const;
    std::string to_text() const;  // aligned table plus per-object detail

    static MetricReport from_csv_text(const std::string& text);
    static MetricReport load_csv(const std::filesystem::path& path);
    void save(const std::filesystem::path& csv_path) const;
};

}  // namespace recon3d
