#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>

#include "crisisspot/autograd.hpp"
#include "crisisspot/nn.hpp"
#include "crisisspot/ops.hpp"

// Inverted dual embedded attention. Every function works on a stacked batch:
// B samples of `seq_len` token rows each, so text is [(B*d) x dt] and image
// is [(B*d) x dv]. Attention is block-diagonal per sample.

namespace crisisspot {

struct IdeaDims {
    std::size_t seq_len = 128;
    std::size_t text_dim = 768;
    std::size_t image_dim = 1024;
    std::size_t shared_dim = 1024;

    std::size_t fav_dim() const { return text_dim + image_dim; }
};

inline constexpr double kHarmoniousTemperature = 1.65;
inline constexpr double kContraryTemperature = 0.75;

template <typename T>
struct SelfAttentionParams {
    Parameter<T>* query = nullptr;
    Parameter<T>* key = nullptr;
    Parameter<T>* value = nullptr;
};

template <typename T>
struct IdeaParams {
    IdeaDims dims;
    DenseLayer<T> proj_text;  // W_t, b_t
    DenseLayer<T> proj_vis;   // W_v, b_v
    BatchNormState<T> bn_text;
    BatchNormState<T> bn_vis;
    Parameter<T>* w_sim = nullptr;  // [d_se x d]
    DenseLayer<T> fuse_vis;         // [2dv x dv]
    DenseLayer<T> fuse_text;        // [2dt x dt]
    DenseLayer<T> cross_vis;        // [(dt+dv) x dv]
    DenseLayer<T> cross_text;       // [(dt+dv) x dt]
    SelfAttentionParams<T> attn_text;
    SelfAttentionParams<T> attn_vis;
    T t_ham = T(kHarmoniousTemperature);
    T t_cam = T(kContraryTemperature);
};

template <typename T>
IdeaParams<T> make_idea_params(ParameterStore<T>& store, const std::string& name, const IdeaDims& d,
                               std::mt19937_64& rng) {
    if (d.seq_len == 0 || d.text_dim == 0 || d.image_dim == 0 || d.shared_dim == 0)
        throw ParameterError(name + ": all attention dims must be positive");
    IdeaParams<T> p;
    p.dims = d;
    const std::size_t dt = d.text_dim, dv = d.image_dim;
    p.proj_text = make_dense(store, name + ".proj_text", dt, d.shared_dim, Activation::none, rng);
    p.proj_vis = make_dense(store, name + ".proj_vis", dv, d.shared_dim, Activation::none, rng);
    p.bn_text = make_batch_norm(store, name + ".bn_text", d.shared_dim);
    p.bn_vis = make_batch_norm(store, name + ".bn_vis", d.shared_dim);
    p.w_sim = &store.add(name + ".w_sim", glorot_uniform<T>(d.shared_dim, d.seq_len, rng));
    p.fuse_vis = make_dense(store, name + ".fuse_vis", 2 * dv, dv, Activation::tanh, rng);
    p.fuse_text = make_dense(store, name + ".fuse_text", 2 * dt, dt, Activation::tanh, rng);
    p.cross_vis = make_dense(store, name + ".cross_vis", dt + dv, dv, Activation::tanh, rng);
    p.cross_text = make_dense(store, name + ".cross_text", dt + dv, dt, Activation::tanh, rng);
    auto self_attn = [&](const std::string& prefix, std::size_t dim) {
        SelfAttentionParams<T> a;
        a.query = &store.add(prefix + ".query", glorot_uniform<T>(dim, dim, rng));
        a.key = &store.add(prefix + ".key", glorot_uniform<T>(dim, dim, rng));
        a.value = &store.add(prefix + ".value", glorot_uniform<T>(dim, dim, rng));
        return a;
    };
    p.attn_text = self_attn(name + ".attn_text", dt);
    p.attn_vis = self_attn(name + ".attn_vis", dv);
    return p;
}

/// tanh(batch_norm(H W + b)).
template <typename T>
Var<T> project_shared(Var<T> h, const DenseLayer<T>& proj, BatchNormState<T>& bn, Mode mode) {
    if (h.cols() != proj.in()) {
        throw ShapeError("project_shared: input " + h.value().shape_string() + " vs weight " +
                         proj.weight->value.shape_string());
    }
    return ops::tanh(batch_norm(proj(h), bn, mode));
}

/// S_hat[i, :] = tanh(sum_m (H_vis[i, m] + H_text[i, m])) broadcast over the
/// shared width, then S = S_hat W_sim.
template <typename T>
Var<T> similarity_matrix(Var<T> h_text, Var<T> h_vis, Var<T> w_sim) {
    ops::require_shape(h_text.value().same_shape(h_vis.value()) && h_text.cols() == w_sim.rows(),
                       "similarity_matrix: text " + h_text.value().shape_string() + ", vis " +
                           h_vis.value().shape_string() + ", W_sim " + w_sim.value().shape_string());
    Var<T> s_hat = ops::tanh(ops::row_sum_broadcast(ops::add(h_text, h_vis), h_text.cols()));
    return ops::matmul(s_hat, w_sim);
}

template <typename T>
struct AttendedPair {
    Var<T> weights;  // [(B*d) x d], row-stochastic
    Var<T> text;     // [(B*d) x dt]
    Var<T> vis;      // [(B*d) x dv]
};

template <typename T>
AttendedPair<T> harmonious_attention(Var<T> s_sim, Var<T> h_text, Var<T> h_vis, T temperature) {
    const std::size_t d = s_sim.cols();
    AttendedPair<T> out;
    out.weights = ops::softmax_rows(s_sim, temperature);
    out.text = ops::block_matmul(out.weights, h_text, d);
    out.vis = ops::block_matmul(out.weights, h_vis, d);
    return out;
}

/// Attention over the negated modalities. Rows are L2-normalized unless
/// `normalize` is false (used to compare against the harmonious branch).
template <typename T>
AttendedPair<T> contrary_attention(Var<T> s_sim, Var<T> h_text, Var<T> h_vis, T temperature,
                                   bool normalize = true) {
    const std::size_t d = s_sim.cols();
    AttendedPair<T> out;
    out.weights = ops::softmax_rows(s_sim, temperature);
    out.text = ops::block_matmul(out.weights, ops::neg(h_text), d);
    out.vis = ops::block_matmul(out.weights, ops::neg(h_vis), d);
    if (normalize) {
        out.text = ops::l2_normalize_rows(out.text);
        out.vis = ops::l2_normalize_rows(out.vis);
    }
    return out;
}

/// Scaled dot-product attention where each row of `x` is its own one-element
/// sequence, so the attention weight is exactly 1.
template <typename T>
Var<T> pooled_self_attention(Var<T> x, const SelfAttentionParams<T>& p) {
    Tape<T>& tape = *x.tape;
    Var<T> q = ops::matmul(x, tape.param(*p.query));
    Var<T> k = ops::matmul(x, tape.param(*p.key));
    Var<T> v = ops::matmul(x, tape.param(*p.value));
    const T scale = T(1) / std::sqrt(static_cast<T>(q.cols()));
    Var<T> weights = ops::softmax_rows(ops::scale(ops::block_matmul_bt(q, k, 1), scale), T(1));
    return ops::block_matmul(weights, v, 1);
}

template <typename T>
Var<T> fuse_attended(const AttendedPair<T>& ham, const AttendedPair<T>& cam, Var<T> h_text,
                     Var<T> h_vis, const IdeaParams<T>& p) {
    auto stage = [](const char* name, bool ok, const std::string& detail) {
        if (!ok) throw ShapeError(std::string("fuse_attended[") + name + "]: " + detail);
    };
    const std::size_t dt = p.dims.text_dim, dv = p.dims.image_dim;
    stage("inputs", h_text.cols() == dt && h_vis.cols() == dv && ham.text.cols() == dt &&
                        ham.vis.cols() == dv && cam.text.cols() == dt && cam.vis.cols() == dv,
          "text " + h_text.value().shape_string() + ", vis " + h_vis.value().shape_string());
    Var<T> v_fuse = p.fuse_vis(ops::concat_cols<T>({ham.vis, cam.vis}));
    Var<T> t_fuse = p.fuse_text(ops::concat_cols<T>({ham.text, cam.text}));
    Var<T> v_fusion = p.cross_vis(ops::concat_cols<T>({t_fuse, h_vis}));
    Var<T> t_fusion = p.cross_text(ops::concat_cols<T>({v_fuse, h_text}));
    Var<T> t_pool = ops::segment_mean_rows(t_fusion, p.dims.seq_len);
    Var<T> v_pool = ops::segment_mean_rows(v_fusion, p.dims.seq_len);
    Var<T> t_final = pooled_self_attention(t_pool, p.attn_text);
    Var<T> v_final = pooled_self_attention(v_pool, p.attn_vis);
    return ops::concat_cols<T>({t_final, v_final});
}

template <typename T>
struct IdeaOutputs {
    Var<T> s_sim;
    AttendedPair<T> ham;
    AttendedPair<T> cam;
    Var<T> fav;  // [B x (dt + dv)]
};

/// Full forward pass from raw token embeddings to the fused attended vector.
template <typename T>
IdeaOutputs<T> idea_forward(IdeaParams<T>& p, Var<T> text, Var<T> image, Mode mode) {
    const auto& d = p.dims;
    if (text.cols() != d.text_dim || image.cols() != d.image_dim || text.rows() != image.rows() ||
        text.rows() % d.seq_len != 0 || text.rows() == 0) {
        throw ShapeError("idea: text " + text.value().shape_string() + ", image " +
                         image.value().shape_string() + " vs dims d=" + std::to_string(d.seq_len) +
                         " dt=" + std::to_string(d.text_dim) + " dv=" + std::to_string(d.image_dim));
    }
    Tape<T>& tape = *text.tape;
    Var<T> h_text = project_shared(text, p.proj_text, p.bn_text, mode);
    Var<T> h_vis = project_shared(image, p.proj_vis, p.bn_vis, mode);
    IdeaOutputs<T> out;
    out.s_sim = similarity_matrix(h_text, h_vis, tape.param(*p.w_sim));
    out.ham = harmonious_attention(out.s_sim, text, image, p.t_ham);
    out.cam = contrary_attention(out.s_sim, text, image, p.t_cam);
    out.fav = fuse_attended(out.ham, out.cam, text, image, p);
    return out;
}

}  // namespace crisisspot
