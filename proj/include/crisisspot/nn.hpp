#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "crisisspot/autograd.hpp"
#include "crisisspot/ops.hpp"

namespace crisisspot {

enum class Mode { train, eval };

using ops::Activation;

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)).
template <typename T>
Matrix<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> unif(-limit, limit);
    Matrix<T> w(fan_in, fan_out);
    for (auto& v : w.data()) v = static_cast<T>(unif(rng));
    return w;
}

/// Per-feature batch normalization parameters and running statistics.
/// `momentum` is the weight kept on the old running value at each update.
template <typename T>
struct BatchNormState {
    Parameter<T>* gamma = nullptr;
    Parameter<T>* beta = nullptr;
    Parameter<T>* running_mean = nullptr;
    Parameter<T>* running_var = nullptr;
    T epsilon = T(1e-5);
    T momentum = T(0.9);

    std::size_t features() const { return gamma->value.cols(); }
};

template <typename T>
BatchNormState<T> make_batch_norm(ParameterStore<T>& store, const std::string& name,
                                  std::size_t features) {
    BatchNormState<T> s;
    s.gamma = &store.add(name + ".gamma", Matrix<T>(1, features, T(1)));
    s.beta = &store.add(name + ".beta", Matrix<T>(1, features, T(0)));
    s.running_mean = &store.add(name + ".running_mean", Matrix<T>(1, features, T(0)), false);
    s.running_var = &store.add(name + ".running_var", Matrix<T>(1, features, T(1)), false);
    return s;
}

/// Normalizes each column of X[n x p]. Train mode uses the batch statistics
/// (biased variance) and folds them into the running estimates; eval mode
/// uses the running estimates. Output is gamma * xhat + beta.
template <typename T>
Var<T> batch_norm(Var<T> x, BatchNormState<T>& state, Mode mode) {
    Tape<T>& tape = *x.tape;
    const auto& xv = x.value();
    const std::size_t n = xv.rows(), p = xv.cols();
    ops::require_shape(n >= 1 && p == state.features(),
                       "batch_norm: input " + xv.shape_string() + " vs " +
                           std::to_string(state.features()) + " features");
    Var<T> gamma = tape.param(*state.gamma);
    Var<T> beta = tape.param(*state.beta);

    Matrix<T> mean(1, p), var(1, p);
    if (mode == Mode::train) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < p; ++c) mean(0, c) += xv(r, c);
        for (auto& m : mean.data()) m /= static_cast<T>(n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < p; ++c) {
                const T d = xv(r, c) - mean(0, c);
                var(0, c) += d * d;
            }
        for (auto& v : var.data()) v /= static_cast<T>(n);

        // Running variance tracks the unbiased estimate.
        const T unbias = n > 1 ? static_cast<T>(n) / static_cast<T>(n - 1) : T(1);
        auto& rm = state.running_mean->value;
        auto& rv = state.running_var->value;
        for (std::size_t c = 0; c < p; ++c) {
            rm(0, c) = state.momentum * rm(0, c) + (T(1) - state.momentum) * mean(0, c);
            rv(0, c) = state.momentum * rv(0, c) + (T(1) - state.momentum) * var(0, c) * unbias;
        }
    } else {
        mean = state.running_mean->value;
        var = state.running_var->value;
    }

    Matrix<T> inv_std(1, p);
    for (std::size_t c = 0; c < p; ++c) inv_std(0, c) = T(1) / std::sqrt(var(0, c) + state.epsilon);
    Matrix<T> xhat(n, p), out(n, p);
    const auto& gv = gamma.value();
    const auto& bv = beta.value();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < p; ++c) {
            xhat(r, c) = (xv(r, c) - mean(0, c)) * inv_std(0, c);
            out(r, c) = gv(0, c) * xhat(r, c) + bv(0, c);
        }

    const bool batch_stats = mode == Mode::train;
    return tape.record(
        std::move(out), {x, gamma, beta}, "batch_norm",
        [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), batch_stats](
            Tape<T>& t, const Matrix<T>& g, const Matrix<T>&) {
            const std::size_t n = g.rows(), p = g.cols();
            Matrix<T> sum_g(1, p), sum_gx(1, p);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < p; ++c) {
                    sum_g(0, c) += g(r, c);
                    sum_gx(0, c) += g(r, c) * xhat(r, c);
                }
            if (t.requires_grad(gamma)) t.grad(gamma) += sum_gx;
            if (t.requires_grad(beta)) t.grad(beta) += sum_g;
            if (!t.requires_grad(x)) return;
            const auto& gam = gamma.value();
            auto& gx = t.grad(x);
            const T nn = static_cast<T>(n);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < p; ++c) {
                    const T scale = gam(0, c) * inv_std(0, c);
                    if (batch_stats) {
                        gx(r, c) += scale * (g(r, c) - sum_g(0, c) / nn -
                                             xhat(r, c) * sum_gx(0, c) / nn);
                    } else {
                        gx(r, c) += scale * g(r, c);
                    }
                }
        });
}

/// Y = act(X W + b).
template <typename T>
Var<T> dense_forward(Var<T> x, Var<T> w, Var<T> b, Activation act) {
    if (x.cols() != w.rows()) {
        throw ShapeError("dense: input " + x.value().shape_string() + " vs weight " +
                         w.value().shape_string());
    }
    return ops::activate(ops::add_bias(ops::matmul(x, w), b), act);
}

template <typename T>
struct DenseLayer {
    Parameter<T>* weight = nullptr;
    Parameter<T>* bias = nullptr;
    Activation activation = Activation::none;

    std::size_t in() const { return weight->value.rows(); }
    std::size_t out() const { return weight->value.cols(); }

    Var<T> operator()(Var<T> x) const {
        Tape<T>& t = *x.tape;
        return dense_forward(x, t.param(*weight), t.param(*bias), activation);
    }
};

template <typename T>
DenseLayer<T> make_dense(ParameterStore<T>& store, const std::string& name, std::size_t in,
                         std::size_t out, Activation act, std::mt19937_64& rng) {
    DenseLayer<T> d;
    d.weight = &store.add(name + ".weight", glorot_uniform<T>(in, out, rng));
    d.bias = &store.add(name + ".bias", Matrix<T>(1, out, T(0)));
    d.activation = act;
    return d;
}

/// Dense layers each followed by dropout (train mode only).
template <typename T>
struct DenseStack {
    std::vector<DenseLayer<T>> layers;
    T dropout_p = T(0);

    std::size_t in() const { return layers.front().in(); }
    std::size_t out() const { return layers.back().out(); }

    Var<T> operator()(Var<T> x, Mode mode, std::mt19937_64& rng) const {
        for (const auto& layer : layers) {
            x = layer(x);
            if (mode == Mode::train) x = ops::dropout(x, dropout_p, rng);
        }
        return x;
    }
};

template <typename T>
DenseStack<T> make_dense_stack(ParameterStore<T>& store, const std::string& name, std::size_t in,
                               const std::vector<std::size_t>& widths, Activation act, T dropout_p,
                               std::mt19937_64& rng) {
    if (widths.empty()) throw ParameterError(name + ": dense stack needs at least one layer");
    DenseStack<T> s;
    s.dropout_p = dropout_p;
    std::size_t prev = in;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        s.layers.push_back(make_dense(store, name + "." + std::to_string(i), prev, widths[i], act, rng));
        prev = widths[i];
    }
    return s;
}

}  // namespace crisisspot
