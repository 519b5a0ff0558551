#pragma once

#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

#include "hiest/tensor.hpp"

namespace hiest {

/// Distance reading between two sensors, by node index.
struct DistanceEntry {
    std::size_t i = 0;
    std::size_t j = 0;
    double meters = 0.0;
};

/// Weighted undirected sensor graph. Weights live in [0,1], the diagonal is
/// zero; self-loops are added only inside adjacency normalization.
struct SensorGraph {
    std::vector<std::string> node_ids;
    Tensor adjacency;  // [N×N]
    std::vector<std::tuple<std::size_t, std::size_t, double>> edges;  // i<j, weight>0

    std::size_t num_nodes() const { return node_ids.size(); }
    double weight(std::size_t i, std::size_t j) const;
};

/// Edge partition of the graph into bi-connected components. Isolated nodes
/// appear as singleton components. A node belongs to two or more components
/// iff it is a cut vertex.
struct BccDecomposition {
    std::vector<std::vector<std::size_t>> components;  // node lists, each sorted
    std::vector<std::size_t> cut_vertices;             // sorted
};

/// Fixed original→regional assignment. Column j holds weight 1/|component j|
/// for every member of component j; cut vertices carry several positive
/// entries in their row.
struct RegionalMapping {
    Tensor m_or;  // [N_o × N_r]
    std::size_t num_regions = 0;
};

/// Thresholded Gaussian kernel over pairwise distances:
/// w_ij = exp(−d²/σ²) with σ the standard deviation of all provided
/// distances; entries below `threshold` are dropped; the result is
/// symmetrized with max(w_ij, w_ji). Throws DataError when σ is zero.
SensorGraph build_adjacency(const std::vector<DistanceEntry>& distances,
                            std::vector<std::string> node_ids, double threshold);

/// Iterative Tarjan bi-connected components over the binarized, symmetrized
/// graph (edge iff weight > 0 in either direction). O(|V|+|E|).
BccDecomposition tarjan_bcc(const SensorGraph& graph);

/// Binary membership from the decomposition, cut vertices assigned to every
/// containing component, then columns normalized to sum 1.
RegionalMapping build_mor(const BccDecomposition& decomp, std::size_t n_o);

/// A_r = M_orᵀ · A_o · M_or.
Tensor regional_adjacency(const SensorGraph& graph, const RegionalMapping& mapping);

/// Mapping file: header "N_o N_r", then one "node_id region_index weight"
/// line per positive entry.
void write_mapping_file(const std::string& path, const SensorGraph& graph,
                        const RegionalMapping& mapping);

}  // namespace hiest
