#include "crisisspot/graph_learning.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace crisisspot {

std::size_t AdjacencyGraph::edge_count() const {
    std::size_t total = 0;
    for (const auto& a : adjacency) total += a.size();
    return total / 2;
}

bool AdjacencyGraph::has_edge(std::size_t i, std::size_t j) const {
    const auto& a = adjacency.at(i);
    return std::binary_search(a.begin(), a.end(), j);
}

std::vector<std::pair<std::size_t, std::size_t>> AdjacencyGraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : adjacency[i])
            if (j > i) out.emplace_back(i, j);
    return out;
}

AdjacencyGraph graph_from_unit_rows(const std::vector<std::vector<double>>& unit,
                                    const std::vector<std::size_t>& zero_rows, double threshold) {
    AdjacencyGraph g;
    g.n = unit.size();
    g.threshold = threshold;
    g.adjacency.assign(g.n, {});
    g.zero_rows = zero_rows;
    std::vector<char> is_zero(g.n, 0);
    for (std::size_t r : zero_rows) is_zero[r] = 1;
    for (std::size_t i = 0; i < g.n; ++i) {
        if (is_zero[i]) continue;
        for (std::size_t j = i + 1; j < g.n; ++j) {
            if (is_zero[j]) continue;
            const double cos = std::inner_product(unit[i].begin(), unit[i].end(), unit[j].begin(), 0.0);
            if (cos > threshold) {
                g.adjacency[i].push_back(j);
                g.adjacency[j].push_back(i);
            }
        }
    }
    // Rows were visited in order, so each list is already sorted.
    return g;
}

void write_edge_list(std::ostream& out, const AdjacencyGraph& g) {
    out << "n=" << g.n << " threshold=" << g.threshold << '\n';
    for (auto [i, j] : g.edges()) out << i << ' ' << j << '\n';
}

void save_edge_list(const std::filesystem::path& path, const AdjacencyGraph& g) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write edge list " + path.string());
    write_edge_list(out, g);
    if (!out) throw DataError("failed writing edge list " + path.string());
}

AdjacencyGraph read_edge_list(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw DataError("edge list: missing header");
    AdjacencyGraph g;
    if (std::sscanf(header.c_str(), "n=%zu threshold=%lf", &g.n, &g.threshold) != 2)
        throw DataError("edge list: malformed header '" + header + "'");
    g.adjacency.assign(g.n, {});
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t i = 0, j = 0;
        if (!(ls >> i >> j) || i >= g.n || j >= g.n || i == j)
            throw DataError("edge list line " + std::to_string(lineno) + ": bad edge '" + line + "'");
        g.adjacency[i].push_back(j);
        g.adjacency[j].push_back(i);
    }
    for (auto& a : g.adjacency) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return g;
}

Neighborhoods sample_neighborhoods(const AdjacencyGraph& g, std::size_t layers, std::size_t sample_size,
                                   std::optional<std::uint64_t> seed) {
    if (sample_size == 0) throw ParameterError("sample_neighborhoods: sample_size must be at least 1");
    Neighborhoods out(layers, std::vector<std::vector<std::size_t>>(g.n));
    std::mt19937_64 rng(seed.value_or(0));
    for (std::size_t k = 0; k < layers; ++k) {
        for (std::size_t v = 0; v < g.n; ++v) {
            const auto& adj = g.adjacency[v];
            auto& dst = out[k][v];
            if (adj.size() <= sample_size || !seed) {
                dst.assign(adj.begin(), adj.begin() + std::min(sample_size, adj.size()));
                continue;
            }
            // Partial Fisher-Yates on a copy, then sort for a canonical order.
            std::vector<std::size_t> pool = adj;
            for (std::size_t i = 0; i < sample_size; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
                std::swap(pool[i], pool[pick(rng)]);
            }
            dst.assign(pool.begin(), pool.begin() + sample_size);
            std::sort(dst.begin(), dst.end());
        }
    }
    return out;
}

}  // namespace crisisspot
