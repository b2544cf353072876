#pragma once

#include <vector>

#include "recon3d/nfe/patch_transformer.hpp"

namespace recon3d {

constexpr int kSelectedFrames = 6;

/// Per-frame signal-image encoder E_f. encode_frames maps six 256x256
/// frames to six (256/patch)^2 x dim token matrices; frames are processed
/// independently (batch-order equivariant by construction).
template <typename S>
class FrameEncoder {
public:
    FrameEncoder(ag::ParamStore<S>& store, Rng& rng, const PatchTransformerConfig& cfg)
        : vit_(store, rng, "ef", cfg) {}

    const PatchTransformerConfig& config() const { return vit_.config(); }

    std::vector<ag::Var<S>> encode_frames_ag(ag::Graph<S>& g,
                                             const std::vector<ImageF>& frames) const {
        check(frames);
        std::vector<ag::Var<S>> out;
        out.reserve(frames.size());
        for (const auto& f : frames) out.push_back(vit_.forward_ag(g, f));
        return out;
    }

    std::vector<ag::Mat<S>> encode_frames(const std::vector<ImageF>& frames) const {
        check(frames);
        std::vector<ag::Mat<S>> out;
        out.reserve(frames.size());
        for (const auto& f : frames) out.push_back(vit_.forward_eval(f));
        return out;
    }

private:
    void check(const std::vector<ImageF>& frames) const {
        if (static_cast<int>(frames.size()) != kSelectedFrames)
            throw shape_error("encode_frames: expected " + std::to_string(kSelectedFrames) +
                              " frames, got " + std::to_string(frames.size()));
    }

    PatchTransformer<S> vit_;
};

}  // namespace recon3d
