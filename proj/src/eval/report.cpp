#include "recon3d/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "recon3d/common/error.hpp"

namespace recon3d {

namespace {
std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
}  // namespace

std::string MetricReport::to_csv() const {
    std::ostringstream os;
    os << "method,2way,10way,perceptual,ssim,fpd,cd,emd\n";
    for (const auto& r : rows)
        os << r.method << ',' << fmt6(r.two_way) << ',' << fmt6(r.ten_way) << ','
           << fmt6(r.perceptual) << ',' << fmt6(r.ssim) << ',' << fmt6(r.fpd) << ','
           << fmt6(r.cd) << ',' << fmt6(r.emd) << "\n";
    return os.str();
}

std::string MetricReport::to_text() const {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof(line), "%-18s %8s %8s %11s %8s %8s %8s %8s\n", "method", "2way",
                  "10way", "perceptual", "ssim", "fpd", "cd", "emd");
    os << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-18s %8.3f %8.3f %11.3f %8.3f %8.3f %8.3f %8.3f\n",
                      r.method.c_str(), r.two_way, r.ten_way, r.perceptual, r.ssim, r.fpd, r.cd,
                      r.emd);
        os << line;
    }
    if (!per_object.empty()) {
        os << "\nper-object (last method):\n";
        for (const auto& o : per_object) {
            std::snprintf(line, sizeof(line),
                          "  %-18s 2way=%.3f 10way=%.3f perceptual=%.3f ssim=%.3f cd=%.3f emd=%.3f\n",
                          o.object_id.c_str(), o.two_way, o.ten_way, o.perceptual, o.ssim, o.cd,
                          o.emd);
            os << line;
        }
    }
    return os.str();
}

MetricReport MetricReport::from_csv_text(const std::string& text) {
    MetricReport report;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw io_error("empty metric CSV");
    if (line != "method,2way,10way,perceptual,ssim,fpd,cd,emd")
        throw io_error("unexpected metric CSV header: " + line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        MetricRow r;
        std::string field;
        if (!std::getline(ls, r.method, ',')) throw io_error("malformed metric CSV row: " + line);
        double* cols[7] = {&r.two_way, &r.ten_way, &r.perceptual, &r.ssim, &r.fpd, &r.cd, &r.emd};
        for (double* c : cols) {
            if (!std::getline(ls, field, ',')) throw io_error("missing column in row: " + line);
            try {
                *c = std::stod(field);
            } catch (const std::exception&) {
                throw io_error("non-numeric metric value in row: " + line);
            }
        }
        report.rows.push_back(r);
    }
    return report;
}

MetricReport MetricReport::load_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot read metric CSV: " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return from_csv_text(buf.str());
}

void MetricReport::save(const std::filesystem::path& csv_path) const {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw io_error("cannot write metric CSV: " + csv_path.string());
    f << to_csv();
    std::filesystem::path txt = csv_path;
    txt.replace_extension(".txt");
    std::ofstream t(txt, std::ios::binary);
    t << to_text();
}

}  // namespace recon3d
