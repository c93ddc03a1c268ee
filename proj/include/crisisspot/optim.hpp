#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>

#include "crisisspot/autograd.hpp"

namespace crisisspot {

template <typename T>
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t step = 0;
    std::map<std::string, Matrix<T>> m;
    std::map<std::string, Matrix<T>> v;
};

/// One bias-corrected Adam update of every trainable parameter. Gradients
/// are checked first so a non-finite gradient leaves the parameters and the
/// optimizer state untouched.
template <typename T>
void adam_step(ParameterStore<T>& store, AdamState<T>& state, double lr) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ParameterError("adam: learning rate must be >= 0");
    for (auto* p : store.trainable()) {
        if (!p->grad.all_finite()) {
            for (std::size_t i = 0; i < p->grad.size(); ++i)
                if (!std::isfinite(static_cast<double>(p->grad[i])))
                    throw NumericError("adam: non-finite gradient in " + p->name + "[" + std::to_string(i) +
                                       "] at step " + std::to_string(state.step + 1));
        }
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (auto* p : store.trainable()) {
        auto [mit, m_new] = state.m.try_emplace(p->name, p->value.rows(), p->value.cols());
        auto [vit, v_new] = state.v.try_emplace(p->name, p->value.rows(), p->value.cols());
        auto& m = mit->second;
        auto& v = vit->second;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = static_cast<double>(p->grad[i]);
            const double mi = state.beta1 * static_cast<double>(m[i]) + (1.0 - state.beta1) * g;
            const double vi = state.beta2 * static_cast<double>(v[i]) + (1.0 - state.beta2) * g * g;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + state.epsilon);
            p->value[i] = static_cast<T>(static_cast<double>(p->value[i]) - update);
        }
    }
}

}  // namespace crisisspot
