#pragma once

#include <cmath>
#include <vector>

#include "recon3d/common/error.hpp"

namespace recon3d {

/// Linear beta schedule over T steps with alpha_t = 1 - beta_t and the
/// running product alpha_bar_t; t = 0 is data (alpha_bar_0 = 1).
struct DiffusionSchedule {
    int timesteps = 0;
    std::vector<double> beta;       // beta[t-1] is beta_t, t in [1, T]
    std::vector<double> alpha_bar;  // alpha_bar[t-1], t in [1, T]

    static DiffusionSchedule make(int t_steps, double beta_min, double beta_max) {
        if (t_steps < 1) throw argument_error("schedule: need at least one timestep");
        if (!(beta_min > 0.0) || !(beta_min < beta_max) || !(beta_max < 1.0))
            throw argument_error("schedule: require 0 < beta_min < beta_max < 1");
        DiffusionSchedule s;
        s.timesteps = t_steps;
        s.beta.resize(static_cast<std::size_t>(t_steps));
        s.alpha_bar.resize(static_cast<std::size_t>(t_steps));
        double prod = 1.0;
        for (int t = 1; t <= t_steps; ++t) {
            double b = t_steps == 1 ? beta_min
                                    : beta_min + (beta_max - beta_min) *
                                                     static_cast<double>(t - 1) /
                                                     static_cast<double>(t_steps - 1);
            s.beta[static_cast<std::size_t>(t - 1)] = b;
            prod *= 1.0 - b;
            s.alpha_bar[static_cast<std::size_t>(t - 1)] = prod;
        }
        return s;
    }

    /// Endpoints rescaled from the canonical 1000-step linear schedule so
    /// the cumulative noise at t = T matches; clamped below 0.999.
    static DiffusionSchedule make_rescaled(int t_steps) {
        double scale = 1000.0 / static_cast<double>(t_steps);
        double bmin = 1e-4 * scale;
        double bmax = std::min(0.02 * scale, 0.999);
        return make(t_steps, bmin, bmax);
    }

    double beta_t(int t) const {
        check_t(t);
        return beta[static_cast<std::size_t>(t - 1)];
    }
    double alpha_t(int t) const { return 1.0 - beta_t(t); }
    double alpha_bar_t(int t) const {
        if (t == 0) return 1.0;
        check_t(t);
        return alpha_bar[static_cast<std::size_t>(t - 1)];
    }

private:
    void check_t(int t) const {
        if (t < 1 || t > timesteps)
            throw argument_error("schedule: timestep " + std::to_string(t) + " out of [1, " +
                                 std::to_string(timesteps) + "]");
    }
};

}  // namespace recon3d
