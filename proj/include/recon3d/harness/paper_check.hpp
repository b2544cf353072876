#pragma once

#include <string>
#include <vector>

#include "recon3d/harness/presets.hpp"

namespace recon3d {

/// Paper-scale instantiation report: exact parameter counts per module and
/// a completed single-item forward pass. The decoder's transformer stack is
/// instantiated block by block (each block's weights are materialised,
/// used, and released) so the check runs within a small memory budget.
struct PaperScaleReport {
    struct Module {
        std::string name;
        std::size_t params = 0;
        std::string output_shape;
        double seconds = 0;
    };
    std::vector<Module> modules;
    std::size_t total_params() const {
        std::size_t n = 0;
        for (const auto& m : modules) n += m.params;
        return n;
    }
    std::string text() const;
};

PaperScaleReport run_paper_scale_check(const ExperimentConfig& paper);

}  // namespace recon3d
