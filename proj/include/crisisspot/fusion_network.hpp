#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "crisisspot/autograd.hpp"
#include "crisisspot/data_model.hpp"
#include "crisisspot/nn.hpp"
#include "crisisspot/ops.hpp"

namespace crisisspot {

inline constexpr double kInformativeThreshold = 0.5;

struct FusionDims {
    std::size_t fav_dim = 1792;
    std::size_t shv_dim = 21;
    std::size_t gfln_dim = 128;
    std::vector<std::size_t> maln{1024, 512, 256, 128};
    std::vector<std::size_t> shln{16, 8};
    std::vector<std::size_t> jfln{256, 128, 64};

    std::size_t jfln_in() const { return maln.back() + shln.back() + gfln_dim; }
};

/// Branches switched off for ablations feed zeros of the same width into the
/// joint network, so the architecture and parameter set stay unchanged.
struct BranchMask {
    bool idea = true;
    bool graph = true;
    bool social = true;

    friend bool operator==(const BranchMask&, const BranchMask&) = default;
};

template <typename T>
struct FusionParams {
    FusionDims dims;
    DenseStack<T> maln;
    DenseStack<T> shln;
    DenseStack<T> jfln;
    DenseLayer<T> head;  // 1 output (informative) or the class count
    Task task = Task::informative;
};

inline std::size_t head_width(Task task) { return task == Task::informative ? 1 : kHumanitarianClasses; }

template <typename T>
FusionParams<T> make_fusion_params(ParameterStore<T>& store, const std::string& name, const FusionDims& d,
                                   Task task, T dropout_p, std::mt19937_64& rng) {
    FusionParams<T> p;
    p.dims = d;
    p.task = task;
    p.maln = make_dense_stack(store, name + ".maln", d.fav_dim, d.maln, Activation::relu, dropout_p, rng);
    p.shln = make_dense_stack(store, name + ".shln", d.shv_dim, d.shln, Activation::relu, dropout_p, rng);
    p.jfln = make_dense_stack(store, name + ".jfln", d.jfln_in(), d.jfln, Activation::relu, dropout_p, rng);
    p.head = make_dense(store, name + ".head", d.jfln.back(), head_width(task), Activation::none, rng);
    return p;
}

namespace detail {
template <typename T>
Var<T> run_stack(const char* what, const DenseStack<T>& s, Var<T> x, Mode mode, std::mt19937_64& rng) {
    if (x.cols() != s.in())
        throw ShapeError(std::string(what) + ": input " + x.value().shape_string() + " vs width " +
                         std::to_string(s.in()));
    return s(x, mode, rng);
}
}  // namespace detail

template <typename T>
Var<T> maln(Var<T> fav, const FusionParams<T>& p, Mode mode, std::mt19937_64& rng) {
    return detail::run_stack("maln", p.maln, fav, mode, rng);
}

template <typename T>
Var<T> shln(Var<T> shv, const FusionParams<T>& p, Mode mode, std::mt19937_64& rng) {
    return detail::run_stack("shln", p.shln, shv, mode, rng);
}

/// Concatenates in the fixed order (maln, shln, gfln).
template <typename T>
Var<T> jfln(Var<T> m, Var<T> s, Var<T> g, const FusionParams<T>& p, Mode mode, std::mt19937_64& rng) {
    if (m.rows() != s.rows() || m.rows() != g.rows())
        throw ShapeError("jfln: branch batch sizes differ");
    return detail::run_stack("jfln", p.jfln, ops::concat_cols<T>({m, s, g}), mode, rng);
}

/// Class probabilities: sigmoid column for the informative task, row
/// softmax for the humanitarian task.
template <typename T>
Var<T> predict_probs(Var<T> joint, const FusionParams<T>& p) {
    Var<T> logits = p.head(joint);
    return p.task == Task::informative ? ops::sigmoid(logits) : ops::softmax_rows(logits, T(1));
}

inline int informative_label(double prob) { return prob >= kInformativeThreshold ? 1 : 0; }

/// Zero-based class index of the largest probability; ties go to the lowest index.
template <typename T>
std::size_t argmax_row(const Matrix<T>& probs, std::size_t r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols(); ++c)
        if (probs(r, c) > probs(r, best)) best = c;
    return best;
}

template <typename T>
Var<T> task_loss(Var<T> probs, const std::vector<int>& labels, Task task) {
    if (task == Task::informative) {
        std::vector<T> y;
        for (int l : labels) y.push_back(static_cast<T>(l));
        return ops::bce_loss(probs, std::move(y));
    }
    std::vector<std::size_t> y;
    for (int l : labels) {
        if (l < 1 || l > static_cast<int>(kHumanitarianClasses))
            throw DataError("humanitarian label " + std::to_string(l) + " outside 1..8");
        y.push_back(static_cast<std::size_t>(l - 1));
    }
    return ops::cce_loss(probs, std::move(y));
}

}  // namespace crisisspot
