#include "hiest/model.hpp"

#include <cmath>

namespace hiest {

std::size_t HiestConfig::receptive_span() const {
    std::size_t span = 0;
    for (std::size_t l = 0; l < num_layers(); ++l) span += (tcn_kernel - 1) * dilation(l);
    return span;
}

void HiestConfig::validate() const {
    if (blocks == 0 || layers_per_block == 0 || hidden == 0 || skip_dim == 0 || d_in == 0 ||
        d_out == 0 || tcn_kernel == 0 || horizon == 0 || history == 0)
        throw DataError("HiestConfig: sizes must be positive");
    if (n_global < 2) throw DataError("HiestConfig: need at least 2 global nodes");
    if (eta1 < 0 || eta2 < 0 || eta3 < 0 || eta4 < 0)
        throw DataError("HiestConfig: eta values must be nonnegative");
    if (receptive_span() > history)
        throw DataError("HiestConfig: receptive span " + std::to_string(receptive_span()) +
                        " exceeds history " + std::to_string(history));
}

namespace {

Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in,
                    std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return Tensor::uniform(std::move(shape), -bound, bound, rng, true);
}

}  // namespace

HiestParams HiestParams::init(const HiestConfig& cfg, std::size_t n_regions,
                              std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    HiestParams p;
    const std::size_t d = cfg.hidden, k = cfg.tcn_kernel;
    p.input_proj = init_uniform({cfg.d_in, d}, cfg.d_in, rng);
    for (std::size_t l = 0; l < cfg.num_layers(); ++l) {
        LayerParams lp;
        lp.tcn_filter_w = init_uniform({d, d, k}, d * k, rng);
        lp.tcn_filter_b = Tensor::zeros({d}, true);
        lp.tcn_gate_w = init_uniform({d, d, k}, d * k, rng);
        lp.tcn_gate_b = Tensor::zeros({d}, true);
        lp.gcn_w = init_uniform({d, d}, d, rng);
        lp.skip_w = init_uniform({d, cfg.skip_dim}, d, rng);
        p.layers.push_back(std::move(lp));
    }
    // uniform soft mapping at the start: zero logits
    p.mrg_logits = Tensor::zeros({n_regions, cfg.n_global}, true);
    p.out1_w = init_uniform({cfg.skip_dim, cfg.skip_dim}, cfg.skip_dim, rng);
    p.out1_b = Tensor::zeros({cfg.skip_dim}, true);
    p.out2_w = init_uniform({cfg.skip_dim, cfg.horizon * cfg.d_out}, cfg.skip_dim, rng);
    p.out2_b = Tensor::zeros({cfg.horizon * cfg.d_out}, true);
    for (auto& [name, t] : p.named()) Tensor(t).set_name(name);
    return p;
}

std::vector<std::pair<std::string, Tensor>> HiestParams::named() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("input_proj", input_proj);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        out.emplace_back(prefix + "tcn_filter_w", layers[l].tcn_filter_w);
        out.emplace_back(prefix + "tcn_filter_b", layers[l].tcn_filter_b);
        out.emplace_back(prefix + "tcn_gate_w", layers[l].tcn_gate_w);
        out.emplace_back(prefix + "tcn_gate_b", layers[l].tcn_gate_b);
        out.emplace_back(prefix + "gcn_w", layers[l].gcn_w);
        out.emplace_back(prefix + "skip_w", layers[l].skip_w);
    }
    out.emplace_back("mrg_logits", mrg_logits);
    out.emplace_back("output.dense1_w", out1_w);
    out.emplace_back("output.dense1_b", out1_b);
    out.emplace_back("output.dense2_w", out2_w);
    out.emplace_back("output.dense2_b", out2_b);
    return out;
}

std::vector<Tensor> HiestParams::all() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
}

void HiestParams::zero_grad() const {
    for (auto& t : all()) Tensor(t).zero_grad();
}

Tensor normalize_adjacency(const Tensor& a) {
    if (a.rank() != 2 || a.dim(0) != a.dim(1))
        throw DimensionError("normalize_adjacency: expected square matrix, got " +
                             shape_to_string(a.shape()));
    Tensor with_loops = add(a, Tensor::identity(a.dim(0)));
    return div_colvec(with_loops, sum(with_loops, 1));
}

HiestGraphs HiestGraphs::build(const SensorGraph& graph, const RegionalMapping& mapping,
                               const HiestConfig& cfg) {
    HiestGraphs g;
    g.n_o = graph.num_nodes();
    g.n_r = mapping.num_regions;
    g.a_o = graph.adjacency.clone_detached();
    g.m_or = mapping.m_or.clone_detached();
    g.m_or_t = transpose(g.m_or);
    g.a_r = regional_adjacency(graph, mapping).clone_detached();
    g.a_o_conv = cfg.normalize_adjacency ? normalize_adjacency(g.a_o) : g.a_o;
    g.a_r_conv = cfg.normalize_adjacency ? normalize_adjacency(g.a_r) : g.a_r;
    return g;
}

Tensor global_mapping(const Tensor& mrg_logits) {
    // column softmax: each global node's column sums to 1
    return softmax(mrg_logits, 0);
}

std::pair<Tensor, Tensor> global_views(const Tensor& a_r, const Tensor& h_r,
                                       const Tensor& m_rg) {
    Tensor m_rg_t = transpose(m_rg);
    Tensor a_g = matmul(matmul(m_rg_t, a_r), m_rg);
    Tensor h_g = node_matmul(m_rg_t, h_r);
    return {a_g, h_g};
}

Tensor meta_gcn(const Tensor& a_conv, const Tensor& h, const Tensor& w) {
    return linear(node_matmul(a_conv, h), w);
}

Tensor gated_tcn(const Tensor& h, const Tensor& filter_w, const Tensor& filter_b,
                 const Tensor& gate_w, const Tensor& gate_b, std::size_t dilation) {
    if (h.rank() != 4)
        throw RankError("gated_tcn: expected [B,T,N,D] input, got " +
                        shape_to_string(h.shape()));
    const std::size_t b = h.dim(0), t = h.dim(1), n = h.dim(2), d = h.dim(3);
    // [B,T,N,D] -> [B,N,D,T] -> [B·N, D, T] for the channel-time convolution
    Tensor x = reshape(permute(h, {0, 2, 3, 1}), {b * n, d, t});
    Tensor filt = hiest::tanh(dilated_causal_conv1d(x, filter_w, filter_b, dilation));
    Tensor gate = sigmoid(dilated_causal_conv1d(x, gate_w, gate_b, dilation));
    Tensor y = mul(filt, gate);
    const std::size_t t_out = y.dim(2);
    const std::size_t d_out = y.dim(1);
    return permute(reshape(y, {b, n, d_out, t_out}), {0, 3, 1, 2});
}

std::pair<Tensor, Tensor> enhance(const Tensor& h_o, const Tensor& h_r, const Tensor& h_g,
                                  const Tensor& m_or, const Tensor& m_rg, double eta1,
                                  double eta2) {
    Tensor h_r_enh = add(h_r, scale(relu(node_matmul(m_rg, h_g)), eta1));
    Tensor h_o_star = add(h_o, scale(relu(node_matmul(m_or, h_r_enh)), eta2));
    return {h_r_enh, h_o_star};
}

std::pair<Tensor, Tensor> update(const Tensor& h_o_star, const Tensor& h_r,
                                 const Tensor& h_g, const Tensor& m_or, const Tensor& m_rg,
                                 double eta3, double eta4) {
    Tensor h_r_star = add(h_r, scale(relu(node_matmul(transpose(m_or), h_o_star)), eta3));
    Tensor h_g_star = add(h_g, scale(relu(node_matmul(transpose(m_rg), h_r_star)), eta4));
    return {h_r_star, h_g_star};
}

HiestModel::HiestModel(HiestConfig cfg, HiestGraphs graphs, HiestParams params)
    : cfg_(std::move(cfg)), graphs_(std::move(graphs)), params_(std::move(params)) {
    cfg_.validate();
    if (cfg_.ag_refresh == AgRefresh::kEpoch) refresh_global_adjacency();
}

Tensor HiestModel::conv_adjacency(const Tensor& raw_on_tape) const {
    return cfg_.normalize_adjacency ? normalize_adjacency(raw_on_tape) : raw_on_tape;
}

void HiestModel::refresh_global_adjacency() {
    // epoch mode: detach the logits so the frozen matrix carries no gradient
    Tensor m_rg = global_mapping(params_.mrg_logits.clone_detached());
    Tensor a_g = matmul(matmul(transpose(m_rg), graphs_.a_r), m_rg);
    frozen_a_g_conv_ = conv_adjacency(a_g).clone_detached();
}

ForwardResult HiestModel::forward(const Tensor& x_in) const {
    if (x_in.rank() != 4)
        throw RankError("forward: expected [B,H,N,D_in] input, got " +
                        shape_to_string(x_in.shape()));
    if (x_in.dim(1) != cfg_.history || x_in.dim(2) != graphs_.n_o ||
        x_in.dim(3) != cfg_.d_in)
        throw DimensionError("forward: input " + shape_to_string(x_in.shape()) +
                             " does not match history " + std::to_string(cfg_.history) +
                             ", nodes " + std::to_string(graphs_.n_o) + ", features " +
                             std::to_string(cfg_.d_in));
    const std::size_t batch = x_in.dim(0);

    // the last layer must still see one step after all causal shrinks
    const std::size_t needed = cfg_.receptive_span() + 1;
    Tensor x = x_in;
    if (cfg_.history < needed) x = pad_front(x, 1, needed - cfg_.history);

    x = linear(x, params_.input_proj);  // [B,T0,N_o,D]

    Tensor m_rg = global_mapping(params_.mrg_logits);
    Tensor a_g_conv;
    if (cfg_.ag_refresh == AgRefresh::kEpoch && frozen_a_g_conv_.defined()) {
        a_g_conv = frozen_a_g_conv_;
    } else {
        Tensor a_g = matmul(matmul(transpose(m_rg), graphs_.a_r), m_rg);
        a_g_conv = conv_adjacency(a_g);
    }
    Tensor m_rg_t = transpose(m_rg);

    Tensor skip_acc;
    Tensor h_r_star, h_g_star;

    for (std::size_t l = 0; l < cfg_.num_layers(); ++l) {
        const auto& lp = params_.layers[l];
        const std::size_t dilation = cfg_.dilation(l);
        Tensor x_res = x;

        Tensor t_out = gated_tcn(x, lp.tcn_filter_w, lp.tcn_filter_b, lp.tcn_gate_w,
                                 lp.tcn_gate_b, dilation);
        const std::size_t t_len = t_out.dim(1);

        // skip path: last-step features of this layer
        Tensor last = reshape(slice(t_out, 1, t_len - 1, 1),
                              {batch, graphs_.n_o, cfg_.hidden});
        Tensor skip = linear(last, lp.skip_w);
        skip_acc = skip_acc.defined() ? add(skip_acc, skip) : skip;

        // cross-hierarchy graph convolution
        Tensor h_o = t_out;
        Tensor h_r = node_matmul(graphs_.m_or_t, h_o);
        Tensor h_g = node_matmul(m_rg_t, h_r);
        h_o = meta_gcn(graphs_.a_o_conv, h_o, lp.gcn_w);
        h_r = meta_gcn(graphs_.a_r_conv, h_r, lp.gcn_w);
        h_g = meta_gcn(a_g_conv, h_g, lp.gcn_w);

        auto [h_r_enh, h_o_star] =
            enhance(h_o, h_r, h_g, graphs_.m_or, m_rg, cfg_.eta1, cfg_.eta2);
        auto [h_r_s, h_g_s] =
            update(h_o_star, h_r_enh, h_g, graphs_.m_or, m_rg, cfg_.eta3, cfg_.eta4);
        h_r_star = h_r_s;
        h_g_star = h_g_s;

        // residual with a front-cropped identity
        const std::size_t drop = x_res.dim(1) - t_len;
        x = add(h_o_star, slice(x_res, 1, drop, t_len));
    }

    // output head: relu -> dense -> relu -> dense on the accumulated skip state
    Tensor out = relu(skip_acc);
    out = linear(out, params_.out1_w, params_.out1_b);
    out = relu(out);
    out = linear(out, params_.out2_w, params_.out2_b);  // [B,N_o,T·D_out]
    Tensor y = permute(reshape(out, {batch, graphs_.n_o, cfg_.horizon, cfg_.d_out}),
                       {0, 2, 1, 3});

    ForwardResult result;
    result.y_hat = y;
    result.h_r_star = h_r_star;
    result.h_g_star = h_g_star;
    result.m_rg = m_rg;
    return result;
}

}  // namespace hiest
