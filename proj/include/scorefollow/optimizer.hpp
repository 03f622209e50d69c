#pragma once

// AdamW with decoupled weight decay plus the cosine-annealing learning-rate
// schedule (epoch-granular, quarter-cycle expressed in epochs).

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "scorefollow/util.hpp"

namespace scorefollow {

struct AdamWConfig {
    double lr = 5e-4;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct CosineSchedule {
    double lr0 = 5e-4;
    double min_lr = 1e-6;
    std::size_t quarter_cycle_epochs = 10;  // full period T = 4 * quarter cycle

    double at(std::size_t epoch) const {
        double T = 4.0 * static_cast<double>(quarter_cycle_epochs);
        return min_lr + (lr0 - min_lr) * (1.0 + std::cos(M_PI * static_cast<double>(epoch) / T)) / 2.0;
    }
};

struct AdamWState {
    std::vector<double> m, v;
    std::size_t step = 0;

    explicit AdamWState(std::size_t size = 0) : m(size, 0.0), v(size, 0.0) {}
};

// One update over a parameter block: param -= lr*wd*param, then the Adam
// step with bias-corrected moments. `lr_now` is the scheduled rate.
inline void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state,
                       const AdamWConfig& cfg, double lr_now) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ConfigError("adamw_step: size mismatch");
    ++state.step;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= lr_now * cfg.weight_decay * params[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= lr_now * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace scorefollow
