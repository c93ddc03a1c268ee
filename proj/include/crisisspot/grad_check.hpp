#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "crisisspot/autograd.hpp"

namespace crisisspot {

struct GradCheckOptions {
    std::size_t probe_count = 50;
    double eps = 1e-6;
    std::uint64_t seed = 0;
    /// Lower bound on the relative-error denominator so that gradients that
    /// are zero up to rounding do not dominate the report.
    double denominator_floor = 1e-6;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t probes = 0;
};

/// Compares reverse-mode gradients with central finite differences on
/// randomly chosen trainable scalars. `loss_fn` must be deterministic and
/// build its graph on the tape it is handed.
template <typename T>
GradCheckResult grad_check(const std::function<Var<T>(Tape<T>&)>& loss_fn, ParameterStore<T>& params,
                           const GradCheckOptions& opts) {
    auto evaluate = [&]() -> double {
        Tape<T> tape;
        const double v = static_cast<double>(loss_fn(tape).value()(0, 0));
        if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
        return v;
    };

    params.zero_grad();
    {
        Tape<T> tape;
        Var<T> loss = loss_fn(tape);
        if (!std::isfinite(static_cast<double>(loss.value()(0, 0))))
            throw NumericError("grad_check: non-finite loss");
        tape.backward(loss);
    }

    std::vector<Parameter<T>*> trainable = params.trainable();
    std::vector<std::pair<Parameter<T>*, std::size_t>> slots;
    for (auto* p : trainable)
        for (std::size_t i = 0; i < p->value.size(); ++i) slots.emplace_back(p, i);
    if (slots.empty()) throw ParameterError("grad_check: no trainable parameters");

    std::mt19937_64 rng(opts.seed);
    std::shuffle(slots.begin(), slots.end(), rng);
    const std::size_t probes = std::min(opts.probe_count, slots.size());

    GradCheckResult result;
    result.probes = probes;
    for (std::size_t k = 0; k < probes; ++k) {
        auto [p, i] = slots[k];
        const T original = p->value[i];
        const T h = static_cast<T>(opts.eps);
        p->value[i] = original + h;
        const double up = evaluate();
        p->value[i] = original - h;
        const double down = evaluate();
        p->value[i] = original;
        // Use the perturbation actually representable in T.
        const double step = static_cast<double>((original + h) - (original - h));
        const double numeric = (up - down) / step;
        const double analytic = static_cast<double>(p->grad[i]);
        const double denom =
            std::max({std::abs(numeric), std::abs(analytic), opts.denominator_floor});
        const double rel = std::abs(numeric - analytic) / denom;
        if (k == 0 || rel > result.max_relative_error) {
            result.max_relative_error = rel;
            result.worst_parameter = p->name;
            result.worst_index = i;
            result.worst_analytic = analytic;
            result.worst_numeric = numeric;
        }
    }
    return result;
}

/// Copies every value of `src` into the same-named entry of `dst`.
template <typename T, typename U>
void copy_parameter_values(const ParameterStore<T>& src, ParameterStore<U>& dst) {
    for (const auto& [name, p] : src) {
        auto& q = dst.at(name);
        if (q.value.rows() != p.value.rows() || q.value.cols() != p.value.cols()) throw ShapeError("copy_parameter_values: shape of " + name);
        q.value = p.value.template cast<U>();
    }
}

/// Checks single-precision reverse-mode gradients against central
/// differences of a double-precision replica of the same model. `reference`
/// must build the identical computation over `reference_params`, whose names
/// and shapes mirror `params`; values are synchronized before probing.
inline GradCheckResult grad_check_mixed(const std::function<Var<float>(Tape<float>&)>& loss_fn,
                                        ParameterStore<float>& params,
                                        const std::function<Var<double>(Tape<double>&)>& reference,
                                        ParameterStore<double>& reference_params,
                                        const GradCheckOptions& opts) {
    copy_parameter_values(params, reference_params);
    params.zero_grad();
    {
        Tape<float> tape;
        Var<float> loss = loss_fn(tape);
        if (!std::isfinite(loss.value()(0, 0))) throw NumericError("grad_check: non-finite loss");
        tape.backward(loss);
    }
    auto evaluate = [&]() {
        Tape<double> tape;
        const double v = reference(tape).value()(0, 0);
        if (!std::isfinite(v)) throw NumericError("grad_check: non-finite reference loss");
        return v;
    };

    std::vector<std::pair<Parameter<float>*, std::size_t>> slots;
    for (auto* p : params.trainable())
        for (std::size_t i = 0; i < p->value.size(); ++i) slots.emplace_back(p, i);
    if (slots.empty()) throw ParameterError("grad_check: no trainable parameters");
    std::mt19937_64 rng(opts.seed);
    std::shuffle(slots.begin(), slots.end(), rng);
    const std::size_t probes = std::min(opts.probe_count, slots.size());

    GradCheckResult result;
    result.probes = probes;
    for (std::size_t k = 0; k < probes; ++k) {
        auto [p, i] = slots[k];
        auto& q = reference_params.at(p->name);
        const double original = q.value[i];
        q.value[i] = original + opts.eps;
        const double up = evaluate();
        q.value[i] = original - opts.eps;
        const double down = evaluate();
        q.value[i] = original;
        const double numeric = (up - down) / (2.0 * opts.eps);
        const double analytic = p->grad[i];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), opts.denominator_floor});
        const double rel = std::abs(numeric - analytic) / denom;
        if (k == 0 || rel > result.max_relative_error) {
            result.max_relative_error = rel;
            result.worst_parameter = p->name;
            result.worst_index = i;
            result.worst_analytic = analytic;
            result.worst_numeric = numeric;
        }
    }
    return result;
}

}  // namespace crisisspot
