#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crisisspot/data_model.hpp"
#include "crisisspot/fusion_network.hpp"
#include "crisisspot/graph_learning.hpp"
#include "crisisspot/idea_attention.hpp"
#include "json.hpp"

namespace crisisspot {

/// Every width in the network. Input dims come from the corpus; hidden
/// widths come from a named profile ("paper", "small", "micro").
struct ModelDims {
    IdeaDims idea;
    std::size_t joint_dim = 512;
    std::vector<std::size_t> sage{512, 512};
    std::vector<std::size_t> gfln{512, 256, 128};
    FusionDims fusion;

    /// Fills the derived widths (FAV, GFLN input/output) and checks them.
    void finalize();
    std::size_t gfln_in() const { return 2 * sage.back(); }

    static ModelDims from_profile(const std::string& profile, const CorpusDims& corpus,
                                  std::size_t graph_layers = 2, std::size_t shared_dim = 0);
};

nlohmann::json to_json(const ModelDims& d);
ModelDims model_dims_from_json(const nlohmann::json& j);

struct ModelOptions {
    Task task = Task::informative;
    double dropout = 0.2;
    std::size_t sample_size = 10;
    double t_ham = kHarmoniousTemperature;
    double t_cam = kContraryTemperature;
    BranchMask branches;
    std::uint64_t seed = 0;
};

template <typename T>
struct Model {
    ModelDims dims;
    ModelOptions options;
    ParameterStore<T> store;
    IdeaParams<T> idea;
    SageParams<T> sage_text;
    SageParams<T> sage_image;
    DenseStack<T> gfln;
    FusionParams<T> fusion;

    Model() = default;
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    // Sub-structs point into `store`; std::map nodes survive a move.
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;
};

template <typename T>
Model<T> build_model(ModelDims dims, const ModelOptions& opt) {
    dims.finalize();
    if (opt.dropout < 0.0 || opt.dropout >= 1.0) throw ParameterError("dropout must lie in [0, 1)");
    if (!(opt.t_ham > 0.0) || !(opt.t_cam > 0.0)) throw ParameterError("temperatures must be positive");
    Model<T> m;
    m.dims = dims;
    m.options = opt;
    std::mt19937_64 rng(opt.seed);
    const T p = static_cast<T>(opt.dropout);
    m.idea = make_idea_params(m.store, "idea", dims.idea, rng);
    m.idea.t_ham = static_cast<T>(opt.t_ham);
    m.idea.t_cam = static_cast<T>(opt.t_cam);
    m.sage_text = make_sage_params(m.store, "sage_text", dims.joint_dim, dims.sage, opt.sample_size, rng);
    m.sage_image = make_sage_params(m.store, "sage_image", dims.joint_dim, dims.sage, opt.sample_size, rng);
    m.gfln = make_dense_stack(m.store, "gfln", dims.gfln_in(), dims.gfln, Activation::relu, p, rng);
    m.fusion = make_fusion_params(m.store, "fusion", dims.fusion, opt.task, p, rng);
    return m;
}

/// Per-batch model inputs. `text`/`image` stack seq_len token rows per
/// sample; `nodes` index the samples inside the split graph.
template <typename T>
struct BatchInputs {
    Matrix<T> text;
    Matrix<T> image;
    Matrix<T> shv;
    std::vector<std::size_t> nodes;

    std::size_t size() const { return nodes.size(); }
};

/// Split-wide graph state: layer-0 node embeddings and sampled neighborhoods.
template <typename T>
struct GraphInputs {
    Matrix<T> joint_text;
    Matrix<T> joint_image;
    Neighborhoods text_neighbors;
    Neighborhoods image_neighbors;
};

template <typename T>
struct ForwardOutputs {
    Var<T> probs;  // [B x 1] or [B x 8]
    Var<T> fav;
    Var<T> shv_hidden;
    Var<T> graph_hidden;
    Var<T> joint;
};

template <typename T>
ForwardOutputs<T> forward(Model<T>& m, Tape<T>& tape, const BatchInputs<T>& in, const GraphInputs<T>& g,
                          Mode mode, std::mt19937_64& rng) {
    const std::size_t B = in.size();
    const auto& d = m.dims;
    if (B == 0) throw ShapeError("forward: empty batch");
    if (in.shv.rows() != B || in.shv.cols() != d.fusion.shv_dim)
        throw ShapeError("forward: SHV " + in.shv.shape_string() + " for batch of " + std::to_string(B));
    if (in.text.rows() != B * d.idea.seq_len)
        throw ShapeError("forward: text " + in.text.shape_string() + " for batch of " + std::to_string(B) +
                         " x seq_len " + std::to_string(d.idea.seq_len));
    ForwardOutputs<T> out;
    Var<T> m_out, s_out, g_out;
    if (m.options.branches.idea) {
        out.fav = idea_forward(m.idea, tape.constant(in.text), tape.constant(in.image), mode).fav;
        m_out = maln(out.fav, m.fusion, mode, rng);
    } else {
        m_out = tape.constant(Matrix<T>(B, d.fusion.maln.back()));
    }
    if (m.options.branches.social) {
        s_out = shln(tape.constant(in.shv), m.fusion, mode, rng);
    } else {
        s_out = tape.constant(Matrix<T>(B, d.fusion.shln.back()));
    }
    if (m.options.branches.graph) {
        if (g.joint_text.cols() != d.joint_dim || g.joint_image.cols() != d.joint_dim)
            throw ShapeError("forward: joint embeddings " + g.joint_text.shape_string() + " vs joint dim " +
                             std::to_string(d.joint_dim));
        Var<T> t_nodes = propagate(tape.constant(g.joint_text), g.text_neighbors, m.sage_text, in.nodes);
        Var<T> i_nodes = propagate(tape.constant(g.joint_image), g.image_neighbors, m.sage_image, in.nodes);
        g_out = gfln_fuse(i_nodes, t_nodes, m.gfln, mode, rng);
    } else {
        g_out = tape.constant(Matrix<T>(B, d.fusion.gfln_dim));
    }
    out.shv_hidden = s_out;
    out.graph_hidden = g_out;
    out.joint = jfln(m_out, s_out, g_out, m.fusion, mode, rng);
    out.probs = predict_probs(out.joint, m.fusion);
    return out;
}

}  // namespace crisisspot
