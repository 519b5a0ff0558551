#include "hiest/losses.hpp"

namespace hiest {

namespace {
constexpr double kBceEps = 1e-7;
constexpr double kRowNormFloor = 1e-12;
}  // namespace

Tensor mae_loss(const Tensor& y_hat, const Tensor& y) {
    if (y_hat.shape() != y.shape())
        throw DimensionError("mae_loss: " + shape_to_string(y_hat.shape()) + " vs " +
                             shape_to_string(y.shape()));
    return mean_abs(sub(y_hat, y));
}

Tensor masked_mae_loss(const Tensor& y_hat, const Tensor& y, const Tensor& mask) {
    if (y_hat.shape() != y.shape() || y.shape() != mask.shape())
        throw DimensionError("masked_mae_loss: " + shape_to_string(y_hat.shape()) + " vs " +
                             shape_to_string(y.shape()) + " vs " +
                             shape_to_string(mask.shape()));
    double count = 0.0;
    for (double m : mask.data()) count += m;
    if (count == 0.0) return Tensor::scalar(0.0);
    return scale(sum(mul(abs(sub(y_hat, y)), mask)), 1.0 / count);
}

Tensor reconstruct_adjacency(const Tensor& h_source, const Tensor& mapping) {
    return sigmoid(gram(node_matmul(mapping, h_source)));
}

Tensor bce_recon_loss(const Tensor& a_hat, const Tensor& a_binary) {
    if (a_hat.shape() != a_binary.shape())
        throw DimensionError("bce_recon_loss: " + shape_to_string(a_hat.shape()) + " vs " +
                             shape_to_string(a_binary.shape()));
    Tensor p = clamp(a_hat, kBceEps, 1.0 - kBceEps);
    Tensor ones = Tensor::full(a_hat.shape(), 1.0);
    Tensor pos = mul(a_binary, log(p));
    Tensor neg = mul(sub(ones, a_binary), log(sub(ones, p)));
    return scale(sum(add(pos, neg)), -1.0 / static_cast<double>(a_hat.size()));
}

Tensor orthogonal_loss(const Tensor& h_g) {
    if (h_g.rank() != 2)
        throw RankError("orthogonal_loss: expected [N_g×D] features, got " +
                        shape_to_string(h_g.shape()));
    const std::size_t n = h_g.dim(0);
    if (n < 2) throw DataError("orthogonal_loss: need at least two global nodes");

    std::vector<Tensor> rows, norms;
    for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(slice(h_g, 0, i, 1));
        norms.push_back(l2_norm(rows.back()));
    }
    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            // degenerate rows are left out of the cosine (zero contribution)
            if (norms[i].item() < kRowNormFloor || norms[j].item() < kRowNormFloor) continue;
            Tensor dot = sum(mul(rows[i], rows[j]));
            Tensor cos = div(dot, mul(norms[i], norms[j]));
            acc = add(acc, abs(cos));
        }
    }
    const double pairs = static_cast<double>(n * (n - 1)) / 2.0;
    return scale(acc, 1.0 / pairs);
}

Tensor binarize_adjacency(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    auto ov = out.mutable_data();
    for (std::size_t i = 0; i < a.size(); ++i) ov[i] = a.data()[i] > 0.0 ? 1.0 : 0.0;
    return out;
}

Tensor time_batch_mean(const Tensor& h) {
    if (h.rank() != 4)
        throw RankError("time_batch_mean: expected [B×T×n×D], got " +
                        shape_to_string(h.shape()));
    return mean(mean(h, 0), 0);
}

LossBreakdown total_objective(const ForwardResult& fwd, const Tensor& y,
                              const Tensor& y_mask, const HiestGraphs& graphs,
                              double norm_mean, double norm_std) {
    LossBreakdown out;
    Tensor y_units = add_scalar(scale(fwd.y_hat, norm_std), norm_mean);
    out.l_pre = masked_mae_loss(y_units, y, y_mask);

    Tensor feat_r = time_batch_mean(fwd.h_r_star);
    Tensor feat_g = time_batch_mean(fwd.h_g_star);

    Tensor a_o_hat = reconstruct_adjacency(feat_r, graphs.m_or);
    out.l_rec_ro = bce_recon_loss(a_o_hat, binarize_adjacency(graphs.a_o));

    Tensor a_r_hat = reconstruct_adjacency(feat_g, fwd.m_rg);
    out.l_rec_gr = bce_recon_loss(a_r_hat, binarize_adjacency(graphs.a_r));

    out.l_ort = orthogonal_loss(feat_g);

    out.total = add(add(add(out.l_pre, out.l_rec_ro), out.l_rec_gr), out.l_ort);
    return out;
}

}  // namespace hiest
