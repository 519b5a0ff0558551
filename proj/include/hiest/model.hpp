#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hiest/graph.hpp"
#include "hiest/tensor.hpp"

namespace hiest {

/// How often the global adjacency is regenerated from the mapping logits:
/// every forward pass (gradients flow through it each step) or frozen once
/// per epoch.
enum class AgRefresh { kStep, kEpoch };

struct HiestConfig {
    std::size_t blocks = 4;
    std::size_t layers_per_block = 2;
    std::size_t hidden = 32;     // D
    std::size_t n_global = 15;   // N_g
    double eta1 = 1.0, eta2 = 1.0, eta3 = 1.0, eta4 = 1.0;
    std::size_t horizon = 12;    // T
    std::size_t history = 12;    // H
    std::size_t tcn_kernel = 2;  // K
    std::size_t skip_dim = 64;
    std::size_t d_in = 1;
    std::size_t d_out = 1;
    bool normalize_adjacency = true;  // row-normalized A+I; raw A·H·W otherwise
    AgRefresh ag_refresh = AgRefresh::kStep;

    std::size_t num_layers() const { return blocks * layers_per_block; }
    /// Dilation of layer l: doubles within each block.
    std::size_t dilation(std::size_t layer) const {
        return std::size_t(1) << (layer % layers_per_block);
    }
    /// Total temporal shrink across all causal convolutions.
    std::size_t receptive_span() const;
    /// Throws on inconsistent settings (receptive span > history, negative
    /// etas, zero sizes).
    void validate() const;
};

struct LayerParams {
    Tensor tcn_filter_w, tcn_filter_b;  // tanh branch
    Tensor tcn_gate_w, tcn_gate_b;      // sigmoid branch
    Tensor gcn_w;                       // one D×D matrix shared by all three graphs
    Tensor skip_w;
};

struct HiestParams {
    Tensor input_proj;  // [D_in × D]
    std::vector<LayerParams> layers;
    Tensor mrg_logits;  // [N_r × N_g]
    Tensor out1_w, out1_b;  // [skip × skip], [skip]
    Tensor out2_w, out2_b;  // [skip × T·D_out], [T·D_out]

    /// Stable names: input_proj, layer{l}.{role}, mrg_logits, output.dense{1,2}_{w,b}.
    std::vector<std::pair<std::string, Tensor>> named() const;
    std::vector<Tensor> all() const;
    void zero_grad() const;

    static HiestParams init(const HiestConfig& cfg, std::size_t n_regions,
                            std::uint64_t seed);
};

/// Fixed graph-side inputs: raw adjacencies for the reconstruction targets,
/// pre-normalized ones for the convolutions.
struct HiestGraphs {
    Tensor a_o,  a_r;   // raw weighted adjacencies
    Tensor a_o_conv, a_r_conv;  // as consumed by the graph convolution
    Tensor m_or, m_or_t;
    std::size_t n_o = 0, n_r = 0;

    static HiestGraphs build(const SensorGraph& graph, const RegionalMapping& mapping,
                             const HiestConfig& cfg);
};

/// Rows sum over each column to one: column-wise softmax of the logits.
Tensor global_mapping(const Tensor& mrg_logits);

/// A_g = M_rgᵀ·A_r·M_rg and H_g = M_rgᵀ·H_r (per batch/time slice).
std::pair<Tensor, Tensor> global_views(const Tensor& a_r, const Tensor& h_r,
                                       const Tensor& m_rg);

/// Shared-weight graph convolution H' = A·H·W applied per batch/time slice.
Tensor meta_gcn(const Tensor& a_conv, const Tensor& h, const Tensor& w);

/// tanh(filter ⋆ H + b1) ⊙ sigmoid(gate ⋆ H + b2) over the time axis of
/// H [B×T×N×D]; output loses (K−1)·dilation steps at the front.
Tensor gated_tcn(const Tensor& h, const Tensor& filter_w, const Tensor& filter_b,
                 const Tensor& gate_w, const Tensor& gate_b, std::size_t dilation);

/// Top-down injection: H_r += η1·relu(M_rg·H_g), then H_o* = H_o + η2·relu(M_or·H_r).
/// Returns (enhanced H_r, H_o*).
std::pair<Tensor, Tensor> enhance(const Tensor& h_o, const Tensor& h_r, const Tensor& h_g,
                                  const Tensor& m_or, const Tensor& m_rg, double eta1,
                                  double eta2);

/// Bottom-up refresh: H_r* = H_r + η3·relu(M_orᵀ·H_o*), then
/// H_g* = H_g + η4·relu(M_rgᵀ·H_r*). Returns (H_r*, H_g*).
std::pair<Tensor, Tensor> update(const Tensor& h_o_star, const Tensor& h_r,
                                 const Tensor& h_g, const Tensor& m_or, const Tensor& m_rg,
                                 double eta3, double eta4);

/// Row-normalized adjacency with self-loops: rownorm(A + I).
Tensor normalize_adjacency(const Tensor& a);

struct ForwardResult {
    Tensor y_hat;     // [B×T×N_o×D_out], standardized units
    Tensor h_r_star;  // last layer [B×T'×N_r×D]
    Tensor h_g_star;  // last layer [B×T'×N_g×D]
    Tensor m_rg;      // [N_r×N_g]
};

class HiestModel {
public:
    HiestModel(HiestConfig cfg, HiestGraphs graphs, HiestParams params);

    /// Full pipeline: input projection, per layer gated TCN + skip +
    /// cross-hierarchy graph convolution (generate, convolve, enhance,
    /// update), then the output head on the accumulated skip state.
    /// Inputs shorter than the receptive span are zero-padded at the front.
    ForwardResult forward(const Tensor& x) const;

    /// Freeze the global adjacency from the current logits (epoch mode).
    void refresh_global_adjacency();

    const HiestConfig& config() const { return cfg_; }
    const HiestGraphs& graphs() const { return graphs_; }
    HiestParams& params() { return params_; }
    const HiestParams& params() const { return params_; }

private:
    Tensor conv_adjacency(const Tensor& raw_on_tape) const;

    HiestConfig cfg_;
    HiestGraphs graphs_;
    HiestParams params_;
    Tensor frozen_a_g_conv_;  // only used in epoch mode
};

}  // namespace hiest
