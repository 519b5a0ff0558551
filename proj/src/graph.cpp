#include "hiest/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace hiest {

double SensorGraph::weight(std::size_t i, std::size_t j) const {
    return adjacency.data()[i * num_nodes() + j];
}

SensorGraph build_adjacency(const std::vector<DistanceEntry>& distances,
                            std::vector<std::string> node_ids, double threshold) {
    const std::size_t n = node_ids.size();
    if (distances.empty()) throw DataError("build_adjacency: no distance pairs provided");
    for (const auto& d : distances) {
        if (d.i >= n || d.j >= n)
            throw DataError("build_adjacency: node index out of range");
        if (d.meters < 0.0) throw DataError("build_adjacency: negative distance");
    }

    double mean = 0.0;
    for (const auto& d : distances) mean += d.meters;
    mean /= static_cast<double>(distances.size());
    double var = 0.0;
    for (const auto& d : distances) var += (d.meters - mean) * (d.meters - mean);
    var /= static_cast<double>(distances.size());
    const double sigma = std::sqrt(var);
    if (sigma == 0.0)
        throw DataError("build_adjacency: all distances identical, kernel bandwidth is zero");

    SensorGraph g;
    g.node_ids = std::move(node_ids);
    g.adjacency = Tensor::zeros({n, n});
    auto a = g.adjacency.mutable_data();
    for (const auto& d : distances) {
        if (d.i == d.j) continue;  // stored diagonal stays zero
        double w = std::exp(-(d.meters * d.meters) / (sigma * sigma));
        if (w < threshold) w = 0.0;
        a[d.i * n + d.j] = std::max(a[d.i * n + d.j], w);
    }
    // symmetrize: w_ij = max(w_ij, w_ji)
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = std::max(a[i * n + j], a[j * n + i]);
            a[i * n + j] = w;
            a[j * n + i] = w;
            if (w > 0.0) g.edges.emplace_back(i, j, w);
        }
    return g;
}

namespace {

std::vector<std::vector<std::size_t>> adjacency_lists(const SensorGraph& g) {
    const std::size_t n = g.num_nodes();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& [i, j, w] : g.edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    return adj;
}

}  // namespace

BccDecomposition tarjan_bcc(const SensorGraph& graph) {
    const std::size_t n = graph.num_nodes();
    auto adj = adjacency_lists(graph);

    constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> disc(n, kUnvisited), low(n, kUnvisited);
    std::vector<std::pair<std::size_t, std::size_t>> edge_stack;
    std::vector<std::set<std::size_t>> components;
    std::size_t timer = 0;

    // Explicit DFS frame: node, parent, index of the next neighbor to visit.
    struct Frame {
        std::size_t node;
        std::size_t parent;
        std::size_t next = 0;
    };

    auto pop_component = [&](std::size_t u, std::size_t v) {
        std::set<std::size_t> comp;
        while (!edge_stack.empty()) {
            auto [a, b] = edge_stack.back();
            edge_stack.pop_back();
            comp.insert(a);
            comp.insert(b);
            if (a == u && b == v) break;
        }
        components.push_back(std::move(comp));
    };

    for (std::size_t root = 0; root < n; ++root) {
        if (disc[root] != kUnvisited) continue;
        if (adj[root].empty()) {
            // isolated node: singleton region
            disc[root] = low[root] = timer++;
            components.push_back({root});
            continue;
        }
        std::vector<Frame> stack;
        stack.push_back({root, kUnvisited});
        disc[root] = low[root] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            const std::size_t u = f.node;
            if (f.next < adj[u].size()) {
                const std::size_t v = adj[u][f.next++];
                if (v == f.parent) continue;
                if (disc[v] == kUnvisited) {
                    edge_stack.emplace_back(u, v);
                    disc[v] = low[v] = timer++;
                    stack.push_back({v, u});
                } else if (disc[v] < disc[u]) {
                    edge_stack.emplace_back(u, v);
                    low[u] = std::min(low[u], disc[v]);
                }
            } else {
                stack.pop_back();
                if (stack.empty()) continue;
                const std::size_t p = stack.back().node;
                low[p] = std::min(low[p], low[u]);
                if (low[u] >= disc[p]) {
                    // p separates the subtree rooted at u; the edges popped
                    // down to (p,u) form one bi-connected component.
                    pop_component(p, u);
                }
            }
        }
    }

    BccDecomposition out;
    out.components.reserve(components.size());
    for (auto& comp : components)
        out.components.emplace_back(comp.begin(), comp.end());
    std::sort(out.components.begin(), out.components.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    // A node is a cut vertex iff it sits in >= 2 components; deriving the
    // flag from the partition sidesteps the root special cases entirely.
    std::vector<std::size_t> membership(n, 0);
    for (const auto& comp : out.components)
        for (std::size_t v : comp) ++membership[v];
    for (std::size_t v = 0; v < n; ++v)
        if (membership[v] >= 2) out.cut_vertices.push_back(v);
    return out;
}

RegionalMapping build_mor(const BccDecomposition& decomp, std::size_t n_o) {
    const std::size_t n_r = decomp.components.size();
    std::vector<bool> covered(n_o, false);
    for (const auto& comp : decomp.components) {
        if (comp.empty()) throw DataError("build_mor: empty component");
        for (std::size_t v : comp) {
            if (v >= n_o) throw DataError("build_mor: node index out of range");
            covered[v] = true;
        }
    }
    for (std::size_t v = 0; v < n_o; ++v)
        if (!covered[v])
            throw DataError("build_mor: node " + std::to_string(v) +
                            " not covered by any component");

    RegionalMapping m;
    m.num_regions = n_r;
    m.m_or = Tensor::zeros({n_o, n_r});
    auto data = m.m_or.mutable_data();
    for (std::size_t j = 0; j < n_r; ++j) {
        const double w = 1.0 / static_cast<double>(decomp.components[j].size());
        for (std::size_t v : decomp.components[j]) data[v * n_r + j] = w;
    }
    return m;
}

Tensor regional_adjacency(const SensorGraph& graph, const RegionalMapping& mapping) {
    if (mapping.m_or.dim(0) != graph.num_nodes())
        throw DimensionError("regional_adjacency: mapping " +
                             shape_to_string(mapping.m_or.shape()) + " vs adjacency " +
                             shape_to_string(graph.adjacency.shape()));
    Tensor mt = transpose(mapping.m_or);
    return matmul(matmul(mt, graph.adjacency), mapping.m_or);
}

void write_mapping_file(const std::string& path, const SensorGraph& graph,
                        const RegionalMapping& mapping) {
    std::ofstream out(path);
    if (!out) throw DataError("write_mapping_file: cannot open " + path);
    const std::size_t n_o = graph.num_nodes(), n_r = mapping.num_regions;
    out << n_o << ' ' << n_r << '\n';
    out.precision(17);
    const auto m = mapping.m_or.data();
    for (std::size_t i = 0; i < n_o; ++i)
        for (std::size_t j = 0; j < n_r; ++j)
            if (m[i * n_r + j] > 0.0)
                out << graph.node_ids[i] << ' ' << j << ' ' << m[i * n_r + j] << '\n';
}

}  // namespace hiest
