#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crisisspot/autograd.hpp"
#include "crisisspot/nn.hpp"
#include "crisisspot/ops.hpp"

namespace crisisspot {

inline constexpr double kGraphThreshold = 0.75;

/// Undirected graph without self-loops, stored as sorted adjacency lists.
struct AdjacencyGraph {
    std::size_t n = 0;
    double threshold = kGraphThreshold;
    std::vector<std::vector<std::size_t>> adjacency;
    /// Rows whose norm was zero; they get no edges.
    std::vector<std::size_t> zero_rows;

    std::size_t edge_count() const;
    bool has_edge(std::size_t i, std::size_t j) const;
    std::size_t degree(std::size_t v) const { return adjacency.at(v).size(); }
    /// Edges (i, j) with i < j in lexicographic order.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;
};

/// Builds the graph from pre-normalized rows: edge (i, j) iff the dot
/// product of unit rows i and j exceeds `threshold`.
AdjacencyGraph graph_from_unit_rows(const std::vector<std::vector<double>>& unit_rows,
                                    const std::vector<std::size_t>& zero_rows, double threshold);

/// Edge (i, j), i < j, iff cos(H_i, H_j) > threshold.
template <typename T>
AdjacencyGraph similarity_graph(const Matrix<T>& h, double threshold = kGraphThreshold) {
    if (h.rows() == 0) throw ParameterError("similarity_graph: no nodes");
    if (!(threshold >= -1.0 && threshold <= 1.0))
        throw ParameterError("similarity_graph: threshold must lie in [-1, 1]");
    if (!h.all_finite()) throw NumericError("similarity_graph: non-finite embedding");
    std::vector<std::vector<double>> unit(h.rows(), std::vector<double>(h.cols()));
    std::vector<std::size_t> zero_rows;
    for (std::size_t r = 0; r < h.rows(); ++r) {
        double norm = 0.0;
        for (T v : h.row(r)) norm += static_cast<double>(v) * static_cast<double>(v);
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            zero_rows.push_back(r);
            continue;
        }
        for (std::size_t c = 0; c < h.cols(); ++c) unit[r][c] = static_cast<double>(h(r, c)) / norm;
    }
    return graph_from_unit_rows(unit, zero_rows, threshold);
}

/// "n=<count> threshold=<t>" header, then one "i j" line per edge.
void write_edge_list(std::ostream& out, const AdjacencyGraph& g);
void save_edge_list(const std::filesystem::path& path, const AdjacencyGraph& g);
AdjacencyGraph read_edge_list(std::istream& in);

/// Neighbor lists per layer: layers[k][v] are the nodes node v aggregates
/// from at layer k + 1.
using Neighborhoods = std::vector<std::vector<std::vector<std::size_t>>>;

/// Draws min(sample_size, deg(v)) neighbors per node and layer without
/// replacement. With no seed the draw is deterministic: the lowest-index
/// neighbors, which is the full neighborhood whenever deg(v) <= sample_size.
Neighborhoods sample_neighborhoods(const AdjacencyGraph& g, std::size_t layers, std::size_t sample_size,
                                   std::optional<std::uint64_t> seed);

template <typename T>
struct SageParams {
    std::vector<Parameter<T>*> weights;  // W_k: [2 h_{k-1} x h_k]
    std::size_t sample_size = 10;
    Activation activation = Activation::relu;

    std::size_t layers() const { return weights.size(); }
    std::size_t out_dim() const { return weights.back()->value.cols(); }
};

template <typename T>
SageParams<T> make_sage_params(ParameterStore<T>& store, const std::string& name, std::size_t in_dim,
                               const std::vector<std::size_t>& widths, std::size_t sample_size,
                               std::mt19937_64& rng) {
    if (widths.empty()) throw ParameterError(name + ": need at least one propagation layer");
    if (sample_size == 0) throw ParameterError(name + ": sample_size must be at least 1");
    SageParams<T> p;
    p.sample_size = sample_size;
    std::size_t prev = in_dim;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        p.weights.push_back(
            &store.add(name + ".w" + std::to_string(k + 1), glorot_uniform<T>(2 * prev, widths[k], rng)));
        prev = widths[k];
    }
    return p;
}

/// Layer-k updates for the nodes in `targets` (in that order), computing only
/// their receptive field. h0 holds the layer-0 embeddings of every node.
/// Each layer: h_v = l2_normalize(act(concat(h_v, mean of sampled h_u) W_k)).
template <typename T>
Var<T> propagate(Var<T> h0, const Neighborhoods& nbrs, const SageParams<T>& params,
                 const std::vector<std::size_t>& targets) {
    const std::size_t K = params.layers();
    const std::size_t n = h0.rows();
    if (nbrs.size() != K)
        throw ShapeError("propagate: " + std::to_string(nbrs.size()) + " neighborhood layers for " +
                         std::to_string(K) + " weight layers");
    for (const auto& layer : nbrs)
        if (layer.size() != n)
            throw ShapeError("propagate: neighborhoods cover " + std::to_string(layer.size()) +
                             " nodes, embeddings " + std::to_string(n));
    for (std::size_t t : targets)
        if (t >= n) throw ShapeError("propagate: target node out of range");

    // needed[k]: nodes whose layer-k embedding is required.
    std::vector<std::vector<std::size_t>> needed(K + 1);
    needed[K] = targets;
    for (std::size_t k = K; k-- > 0;) {
        std::vector<char> mark(n, 0);
        for (std::size_t v : needed[k + 1]) {
            mark[v] = 1;
            for (std::size_t u : nbrs[k][v]) mark[u] = 1;
        }
        for (std::size_t v = 0; v < n; ++v)
            if (mark[v]) needed[k].push_back(v);
    }

    Tape<T>& tape = *h0.tape;
    Var<T> h = ops::gather_rows(h0, needed[0]);
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<std::size_t> pos(n, n);
        for (std::size_t i = 0; i < needed[k].size(); ++i) pos[needed[k][i]] = i;
        std::vector<std::size_t> self;
        std::vector<std::vector<std::size_t>> lists;
        for (std::size_t v : needed[k + 1]) {
            self.push_back(pos[v]);
            auto& l = lists.emplace_back();
            for (std::size_t u : nbrs[k][v]) l.push_back(pos[u]);
        }
        Var<T> agg = ops::neighbor_mean(h, std::move(lists));
        Var<T> cat = ops::concat_cols<T>({ops::gather_rows(h, std::move(self)), agg});
        if (cat.cols() != params.weights[k]->value.rows())
            throw ShapeError("propagate: layer " + std::to_string(k + 1) + " input " +
                             cat.value().shape_string() + " vs W " + params.weights[k]->value.shape_string());
        h = ops::l2_normalize_rows(
            ops::activate(ops::matmul(cat, tape.param(*params.weights[k])), params.activation));
    }
    return h;
}

/// Updates every node of the graph.
template <typename T>
Var<T> propagate(Var<T> h0, const Neighborhoods& nbrs, const SageParams<T>& params) {
    std::vector<std::size_t> all(h0.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return propagate(h0, nbrs, params, all);
}

/// Concatenated image and text node embeddings through the ReLU stack
/// 1024 -> 512 -> 256 -> 128 (at full size).
template <typename T>
Var<T> gfln_fuse(Var<T> image_nodes, Var<T> text_nodes, const DenseStack<T>& gfln, Mode mode,
                 std::mt19937_64& rng) {
    if (image_nodes.rows() != text_nodes.rows() || image_nodes.cols() + text_nodes.cols() != gfln.in())
        throw ShapeError("gfln: image " + image_nodes.value().shape_string() + " + text " +
                         text_nodes.value().shape_string() + " vs input width " + std::to_string(gfln.in()));
    return gfln(ops::concat_cols<T>({image_nodes, text_nodes}), mode, rng);
}

}  // namespace crisisspot
