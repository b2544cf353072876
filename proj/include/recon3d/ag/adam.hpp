#pragma once

#include <cmath>
#include <vector>

#include "recon3d/ag/graph.hpp"

namespace recon3d::ag {

/// Adam with optional global-norm clipping and cosine learning-rate decay.
template <typename Scalar>
class Adam {
public:
    struct Options {
        Scalar lr = Scalar(1e-3);
        Scalar beta1 = Scalar(0.9);
        Scalar beta2 = Scalar(0.999);
        Scalar eps = Scalar(1e-8);
        Scalar clip_norm = Scalar(0);  // <= 0 disables clipping
        long total_steps = 0;          // > 0 enables cosine decay to lr_min
        Scalar lr_min_frac = Scalar(0.1);
    };

    Adam(ParamStore<Scalar>& store, Options opt) : store_(&store), opt_(opt) {
        m_.reserve(static_cast<std::size_t>(store.size()));
        v_.reserve(static_cast<std::size_t>(store.size()));
        for (int i = 0; i < store.size(); ++i) {
            m_.push_back(Mat<Scalar>::Zero(store.value(i).rows(), store.value(i).cols()));
            v_.push_back(Mat<Scalar>::Zero(store.value(i).rows(), store.value(i).cols()));
        }
    }

    Scalar current_lr() const {
        if (opt_.total_steps <= 0) return opt_.lr;
        double frac = std::min(1.0, static_cast<double>(step_) /
                                        static_cast<double>(opt_.total_steps));
        double cosine = 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
        double lo = static_cast<double>(opt_.lr) * static_cast<double>(opt_.lr_min_frac);
        return static_cast<Scalar>(lo + (static_cast<double>(opt_.lr) - lo) * cosine);
    }

    /// Applies one update from the accumulated gradients. `mask` (when
    /// non-empty) restricts the update to the listed parameter ids; all
    /// other parameters stay frozen.
    void step(GradBuffer<Scalar>& grads, const std::vector<int>& mask = {}) {
        const Scalar lr = current_lr();
        ++step_;
        if (opt_.clip_norm > Scalar(0)) {
            double sq = 0;
            for_each_id(mask, [&](int id) { sq += static_cast<double>(grads[id].squaredNorm()); });
            double norm = std::sqrt(sq);
            if (norm > static_cast<double>(opt_.clip_norm)) {
                Scalar s = static_cast<Scalar>(static_cast<double>(opt_.clip_norm) / norm);
                for_each_id(mask, [&](int id) { grads[id] *= s; });
            }
        }
        const Scalar b1c = Scalar(1) - std::pow(opt_.beta1, Scalar(step_));
        const Scalar b2c = Scalar(1) - std::pow(opt_.beta2, Scalar(step_));
        for_each_id(mask, [&](int id) {
            auto& g = grads[id];
            auto& m = m_[static_cast<std::size_t>(id)];
            auto& v = v_[static_cast<std::size_t>(id)];
            m = opt_.beta1 * m + (Scalar(1) - opt_.beta1) * g;
            v = opt_.beta2 * v + (Scalar(1) - opt_.beta2) * g.cwiseProduct(g);
            store_->value(id).array() -=
                lr * (m.array() / b1c) /
                ((v.array() / b2c).sqrt() + opt_.eps);
        });
    }

    long steps_taken() const { return step_; }

private:
    template <typename F>
    void for_each_id(const std::vector<int>& mask, F&& f) {
        if (mask.empty()) {
            for (int id = 0; id < store_->size(); ++id) f(id);
        } else {
            for (int id : mask) f(id);
        }
    }

    ParamStore<Scalar>* store_;
    Options opt_;
    std::vector<Mat<Scalar>> m_, v_;
    long step_ = 0;
};

}  // namespace recon3d::ag
