// optimizer.hpp -- AdamW with decoupled weight decay, plus the warmup+cosine
// learning-rate schedule.
#pragma once

#include <cmath>

#include "vpt/model.hpp"
#include "vpt/util.hpp"

namespace vpt {

template <class S>
struct AdamState {
    ModelParams<S> m, v;
    long step = 0;

    static AdamState make(const ModelConfig& cfg) {
        AdamState s;
        s.m = zero_params<S>(cfg);
        s.v = zero_params<S>(cfg);
        return s;
    }
};

// One AdamW step. Decay is decoupled and applied before the adaptive update:
//   p *= 1 - lr*wd
//   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
//   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <class S>
void adamw_step(ModelParams<S>& params, ModelParams<S>& grads, AdamState<S>& state, double lr,
                double wd = 0.05, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    auto pv = tensor_views(params);
    auto gv = tensor_views(grads);
    auto mv = tensor_views(state.m);
    auto vv = tensor_views(state.v);
    if (pv.size() != gv.size()) fail("gradient/parameter structure mismatch");

    for (const auto& g : gv)
        for (long i = 0; i < g.size(); ++i)
            if (!std::isfinite(static_cast<double>(g.data[i])))
                fail("non-finite gradient in ", g.name);

    state.step += 1;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    const double decay = 1.0 - lr * wd;

    for (std::size_t t = 0; t < pv.size(); ++t) {
        S* p = pv[t].data;
        const S* g = gv[t].data;
        S* m = mv[t].data;
        S* v = vv[t].data;
        for (long i = 0; i < pv[t].size(); ++i) {
            double gi = static_cast<double>(g[i]);
            double pi = static_cast<double>(p[i]) * decay;
            double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * gi;
            double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * gi * gi;
            m[i] = static_cast<S>(mi);
            v[i] = static_cast<S>(vi);
            p[i] = static_cast<S>(pi - lr * (mi / c1) / (std::sqrt(vi / c2) + eps));
        }
    }
}

// Linear warmup from 0 to base_lr over floor(warmup_frac * total) steps, then
// cosine decay to 0 at total_steps.
inline double lr_schedule(long step, long total_steps, double warmup_frac, double base_lr) {
    if (total_steps <= 0) fail("lr schedule needs total_steps > 0");
    if (step < 0 || step > total_steps) fail("schedule step ", step, " outside [0, ", total_steps, "]");
    if (warmup_frac < 0.0 || warmup_frac > 1.0) fail("warmup fraction must be in [0, 1]");
    long warmup = static_cast<long>(std::floor(warmup_frac * static_cast<double>(total_steps)));
    if (step < warmup)
        return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
    if (step == warmup) return base_lr;
    double progress = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
    return base_lr * 0.5 * (1.0 + std::cos(progress * 3.14159265358979323846));
}

}  // namespace vpt
