#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "crisisspot/errors.hpp"
#include "crisisspot/tensor.hpp"

namespace crisisspot {

/// A named tensor owned by a ParameterStore. Non-trainable entries hold
/// buffers (batch-norm running statistics) that are checkpointed but never
/// touched by the optimizer.
template <typename T>
struct Parameter {
    std::string name;
    Matrix<T> value;
    Matrix<T> grad;
    bool trainable = true;
};

/// Ordered collection of parameters. std::map keeps addresses stable and
/// iteration order deterministic (checkpoints and optimizer state depend on it).
template <typename T>
class ParameterStore {
public:
    ParameterStore() = default;
    ParameterStore(const ParameterStore&) = delete;
    ParameterStore& operator=(const ParameterStore&) = delete;
    ParameterStore(ParameterStore&&) = default;
    ParameterStore& operator=(ParameterStore&&) = default;

    Parameter<T>& add(const std::string& name, Matrix<T> value, bool trainable = true) {
        auto [it, inserted] = params_.try_emplace(name);
        if (!inserted) throw ParameterError("duplicate parameter name: " + name);
        it->second.name = name;
        it->second.grad = Matrix<T>(value.rows(), value.cols());
        it->second.value = std::move(value);
        it->second.trainable = trainable;
        return it->second;
    }

    Parameter<T>& at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw ParameterError("unknown parameter: " + name);
        return it->second;
    }
    const Parameter<T>& at(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw ParameterError("unknown parameter: " + name);
        return it->second;
    }
    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    void zero_grad() {
        for (auto& [_, p] : params_) p.grad.fill(T(0));
    }

    std::vector<Parameter<T>*> trainable() {
        std::vector<Parameter<T>*> out;
        for (auto& [_, p] : params_)
            if (p.trainable) out.push_back(&p);
        return out;
    }

    std::size_t trainable_scalar_count() const {
        std::size_t n = 0;
        for (const auto& [_, p] : params_)
            if (p.trainable) n += p.value.size();
        return n;
    }

    std::size_t size() const { return params_.size(); }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::map<std::string, Parameter<T>> params_;
};

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape.
template <typename T>
struct Var {
    Tape<T>* tape = nullptr;
    std::size_t id = 0;

    const Matrix<T>& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

/// Records operations in execution order, which is already a topological
/// order; backward() walks the records once in reverse.
template <typename T>
class Tape {
public:
    /// Receives the gradient w.r.t. the op output and the output value itself.
    using BackwardFn =
        std::function<void(Tape&, const Matrix<T>& grad_out, const Matrix<T>& out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> constant(Matrix<T> value) { return push(std::move(value), false, "constant"); }

    /// Leaf bound to a parameter. Repeated calls for the same parameter return
    /// the same node so gradient accumulation happens in one place.
    Var<T> param(Parameter<T>& p) {
        auto it = leaf_of_.find(&p);
        if (it != leaf_of_.end()) return Var<T>{this, it->second};
        Var<T> v = push(p.value, p.trainable, p.name.c_str());
        nodes_[v.id].param = &p;
        leaf_of_.emplace(&p, v.id);
        return v;
    }

    /// Appends the result of an op. `inputs` decide whether gradients flow.
    Var<T> record(Matrix<T> value, std::initializer_list<Var<T>> inputs, const char* op,
                  BackwardFn backward) {
        bool needs = false;
        for (const auto& in : inputs) needs = needs || nodes_[in.id].requires_grad;
        return record_if(std::move(value), needs, op, std::move(backward));
    }

    Var<T> record_if(Matrix<T> value, bool needs, const char* op, BackwardFn backward) {
        Var<T> v = push(std::move(value), needs, op);
        if (needs) nodes_[v.id].backward = std::move(backward);
        return v;
    }

    const Matrix<T>& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }

    Matrix<T>& grad(Var<T> v) {
        auto& n = nodes_[v.id];
        if (n.grad.empty() && !n.value.empty()) n.grad = Matrix<T>(n.value.rows(), n.value.cols());
        return n.grad;
    }

    /// Seeds d(loss)/d(loss) = 1 and propagates. Parameter gradients are
    /// accumulated into Parameter::grad.
    void backward(Var<T> loss) {
        if (loss.tape != this) throw ParameterError("backward: loss recorded on a different tape");
        const auto& lv = nodes_[loss.id].value;
        if (lv.rows() != 1 || lv.cols() != 1) {
            throw ShapeError("backward: loss must be 1x1, got " + lv.shape_string());
        }
        if (!nodes_[loss.id].requires_grad) return;
        grad(loss)(0, 0) = T(1);
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            auto& n = nodes_[i];
            if (!n.requires_grad || n.grad.empty()) continue;
            // Closures only touch grads of earlier nodes.
            if (n.backward) n.backward(*this, n.grad, n.value);
            if (n.param != nullptr) n.param->grad += n.grad;
        }
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix<T> value;
        Matrix<T> grad;
        bool requires_grad = false;
        Parameter<T>* param = nullptr;
        BackwardFn backward;
    };

    Var<T> push(Matrix<T> value, bool requires_grad, const char* op) {
        if (!value.all_finite()) {
            throw NumericError(std::string("non-finite value produced by ") + op);
        }
        nodes_.push_back(Node{std::move(value), {}, requires_grad, nullptr, {}});
        return Var<T>{this, nodes_.size() - 1};
    }

    // deque: values stay addressable while later ops are appended.
    std::deque<Node> nodes_;
    std::unordered_map<const Parameter<T>*, std::size_t> leaf_of_;
};

template <typename T>
const Matrix<T>& Var<T>::value() const {
    return tape->value(id);
}

}  // namespace crisisspot
