#pragma once

#include "recon3d/ag/ops.hpp"

namespace recon3d {

/// Symmetric InfoNCE over cosine similarities with matched pairs on the
/// diagonal: the mean of signal->vision and vision->signal cross-entropies,
/// logits scaled by 1/tau. Differentiable in both batches and in tau.
template <typename S>
ag::Var<S> clip_align_loss(ag::Graph<S>& g, const ag::Var<S>& batch_cf,
                           const ag::Var<S>& batch_cv, const ag::Var<S>& tau) {
    const Eigen::Index b = batch_cf.rows();
    if (b == 0) throw argument_error("clip_align_loss: empty batch");
    if (batch_cv.rows() != b || batch_cv.cols() != batch_cf.cols())
        throw shape_error("clip_align_loss: batch shapes differ");
    if (tau.rows() != 1 || tau.cols() != 1)
        throw shape_error("clip_align_loss: tau must be 1x1");
    if (!(tau.value()(0, 0) > S(0)))
        throw argument_error("clip_align_loss: temperature must be positive");

    ag::Var<S> an = ag::l2normalize_rows(g, batch_cf);
    ag::Var<S> bn = ag::l2normalize_rows(g, batch_cv);
    ag::Var<S> logits = ag::scale_var(g, ag::matmul_nt(g, an, bn), ag::reciprocal(g, tau));
    std::vector<int> diag(static_cast<std::size_t>(b));
    for (Eigen::Index i = 0; i < b; ++i) diag[static_cast<std::size_t>(i)] = static_cast<int>(i);
    ag::Var<S> fwd = ag::cross_entropy_rows(g, logits, diag);
    ag::Var<S> bwd = ag::cross_entropy_rows(g, ag::transpose(g, logits), diag);
    return ag::scale(g, ag::add(g, fwd, bwd), S(0.5));
}

}  // namespace recon3d
