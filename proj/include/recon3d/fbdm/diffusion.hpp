#pragma once

#include <cmath>
#include <vector>

#include "recon3d/fbdm/denoiser.hpp"
#include "recon3d/fbdm/schedule.hpp"

namespace recon3d {

template <typename S>
ag::Mat<S> gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    ag::Mat<S> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<S>(rng.normal());
    return m;
}

/// Closed-form forward noising x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps,
/// the t-fold composition of the one-step update.
template <typename S>
ag::Mat<S> q_sample(const ag::Mat<S>& x0, int t, const ag::Mat<S>& eps,
                    const DiffusionSchedule& sched) {
    if (t < 1 || t > sched.timesteps)
        throw argument_error("q_sample: timestep out of range");
    if (x0.rows() != eps.rows() || x0.cols() != eps.cols())
        throw shape_error("q_sample: noise shape must match x0");
    double ab = sched.alpha_bar_t(t);
    return static_cast<S>(std::sqrt(ab)) * x0 + static_cast<S>(std::sqrt(1.0 - ab)) * eps;
}

/// Epsilon-prediction objective: per item, draw t ~ U[1,T] and eps ~ N(0,I),
/// noise x0 in closed form and penalise the mean squared error between true
/// and predicted noise (per element, then averaged over the batch).
/// `Den` provides predict_ag(graph, x_t, t, cond).
template <typename S, typename Den>
ag::Var<S> fbdm_loss(ag::Graph<S>& g, const Den& den, const DiffusionSchedule& sched,
                     const std::vector<ag::Mat<S>>& x0_batch,
                     const std::vector<ag::Var<S>>& cond_batch, Rng& rng) {
    if (x0_batch.empty()) throw argument_error("fbdm_loss: empty batch");
    if (x0_batch.size() != cond_batch.size())
        throw argument_error("fbdm_loss: condition batch size mismatch");
    ag::Var<S> total;
    for (std::size_t i = 0; i < x0_batch.size(); ++i) {
        int t = static_cast<int>(rng.uniform_int(1, sched.timesteps));
        ag::Mat<S> eps = gaussian_matrix<S>(rng, x0_batch[i].rows(), x0_batch[i].cols());
        ag::Mat<S> x_t = q_sample(x0_batch[i], t, eps, sched);
        ag::Var<S> pred = den.predict_ag(g, g.constant(x_t), t, cond_batch[i]);
        ag::Var<S> item = ag::mse_const(g, pred, eps);
        total = total.valid() ? ag::add(g, total, item) : item;
    }
    return ag::scale(g, total, S(1) / static_cast<S>(x0_batch.size()));
}

/// Ancestral DDPM sampling from pure noise with sigma_t^2 = beta_t and no
/// noise on the final step; `inject_noise = false` gives the deterministic
/// posterior-mean trajectory. Output shape equals the condition shape.
template <typename S, typename Den>
ag::Mat<S> ddpm_sample(const Den& den, const DiffusionSchedule& sched,
                       const ag::Mat<S>& cond_tokens, std::uint64_t seed,
                       bool inject_noise = true) {
    Rng rng(derive_seed(seed, {0xdd51ULL}));
    ag::Mat<S> x = gaussian_matrix<S>(rng, cond_tokens.rows(), cond_tokens.cols());
    for (int t = sched.timesteps; t >= 1; --t) {
        ag::Mat<S> eps_hat = den.predict(x, t, cond_tokens);
        double ab = sched.alpha_bar_t(t);
        double a = sched.alpha_t(t);
        double b = sched.beta_t(t);
        x = (x - static_cast<S>(b / std::sqrt(1.0 - ab)) * eps_hat) /
            static_cast<S>(std::sqrt(a));
        if (inject_noise && t > 1)
            x += static_cast<S>(std::sqrt(b)) *
                 gaussian_matrix<S>(rng, cond_tokens.rows(), cond_tokens.cols());
    }
    return x;
}

}  // namespace recon3d
