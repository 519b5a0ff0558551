// Independent reference implementations used only by tests. These stay
// deliberately naive so they cannot share a bug with the library path.
#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <vector>

namespace oracle {

// Plain triple-loop matrix product.
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  std::size_t m, std::size_t k, std::size_t n) {
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[t * n + j];
            c[i * n + j] = acc;
        }
    return c;
}

// ---- brute-force bi-connected components over an edge list -----------------

struct BruteGraph {
    std::size_t n = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // undirected, i<j

    std::vector<std::vector<std::size_t>> adjacency() const {
        std::vector<std::vector<std::size_t>> adj(n);
        for (auto [i, j] : edges) {
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
        return adj;
    }
};

// Connected-component count on the subgraph induced by `alive` nodes.
inline std::size_t count_components(const BruteGraph& g, const std::vector<bool>& alive) {
    auto adj = g.adjacency();
    std::vector<bool> seen(g.n, false);
    std::size_t comps = 0;
    for (std::size_t s = 0; s < g.n; ++s) {
        if (!alive[s] || seen[s]) continue;
        ++comps;
        std::vector<std::size_t> stack{s};
        seen[s] = true;
        while (!stack.empty()) {
            std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v : adj[u])
                if (alive[v] && !seen[v]) {
                    seen[v] = true;
                    stack.push_back(v);
                }
        }
    }
    return comps;
}

// Definition-level cut vertices: removal increases the component count.
inline std::vector<std::size_t> cut_vertices(const BruteGraph& g) {
    std::vector<bool> all(g.n, true);
    const std::size_t base = count_components(g, all);
    std::vector<std::size_t> cuts;
    for (std::size_t v = 0; v < g.n; ++v) {
        std::vector<bool> alive(g.n, true);
        alive[v] = false;
        if (count_components(g, alive) > base) cuts.push_back(v);
    }
    return cuts;
}

// Whether the subgraph induced on `nodes` is biconnected: an edge for
// |nodes| == 2, otherwise connected with no internal cut vertex.
inline bool induced_biconnected(const BruteGraph& g, const std::set<std::size_t>& nodes) {
    if (nodes.size() < 2) return false;
    BruteGraph sub;
    std::vector<std::size_t> remap(g.n, 0);
    std::size_t idx = 0;
    for (std::size_t v : nodes) remap[v] = idx++;
    sub.n = nodes.size();
    for (auto [i, j] : g.edges)
        if (nodes.count(i) && nodes.count(j)) sub.edges.emplace_back(remap[i], remap[j]);
    if (nodes.size() == 2) return !sub.edges.empty();
    std::vector<bool> all(sub.n, true);
    if (count_components(sub, all) != 1) return false;
    for (std::size_t v = 0; v < sub.n; ++v) {
        std::vector<bool> alive(sub.n, true);
        alive[v] = false;
        if (count_components(sub, alive) != 1) return false;
    }
    return true;
}

// All maximal biconnected vertex sets, plus singletons for isolated nodes.
// Exponential; for graphs of at most ~12 nodes only.
inline std::vector<std::vector<std::size_t>> bcc_components(const BruteGraph& g) {
    std::vector<std::set<std::size_t>> bic;
    const std::size_t limit = std::size_t(1) << g.n;
    for (std::size_t massk = 0; massk < limit; ++massk) {
        std::set<std::size_t> nodes;
        for (std::size_t v = 0; v < g.n; ++v)
            if (massk & (std::size_t(1) << v)) nodes.insert(v);
        if (nodes.size() < 2) continue;
        if (induced_biconnected(g, nodes)) bic.push_back(std::move(nodes));
    }
    std::vector<std::vector<std::size_t>> maximal;
    for (std::size_t i = 0; i < bic.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < bic.size() && !dominated; ++j)
            if (i != j && std::includes(bic[j].begin(), bic[j].end(), bic[i].begin(),
                                        bic[i].end()) &&
                bic[j].size() > bic[i].size())
                dominated = true;
        if (!dominated) maximal.emplace_back(bic[i].begin(), bic[i].end());
    }
    // isolated nodes become singleton components
    std::vector<bool> touched(g.n, false);
    for (auto [i, j] : g.edges) touched[i] = touched[j] = true;
    for (std::size_t v = 0; v < g.n; ++v)
        if (!touched[v]) maximal.push_back({v});
    std::sort(maximal.begin(), maximal.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return maximal;
}

}  // namespace oracle
