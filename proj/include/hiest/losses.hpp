#pragma once

#include "hiest/model.hpp"
#include "hiest/tensor.hpp"

namespace hiest {

/// The four objective terms, all scalars on the same tape.
/// total == l_pre + l_rec_ro + l_rec_gr + l_ort by construction.
struct LossBreakdown {
    Tensor l_pre, l_rec_ro, l_rec_gr, l_ort, total;
};

/// Mean absolute error over every entry.
Tensor mae_loss(const Tensor& y_hat, const Tensor& y);

/// MAE over entries whose mask is 1; zero when nothing is masked in.
Tensor masked_mae_loss(const Tensor& y_hat, const Tensor& y, const Tensor& mask);

/// Â = sigmoid((M·H)·(M·H)ᵀ): map source features up, then a Gram matrix
/// squashed to (0,1). Symmetric by construction.
Tensor reconstruct_adjacency(const Tensor& h_source, const Tensor& mapping);

/// Binary cross-entropy against a {0,1} adjacency, predictions clamped to
/// [1e-7, 1−1e-7], averaged over all n² entries.
Tensor bce_recon_loss(const Tensor& a_hat, const Tensor& a_binary);

/// Mean |cosine| over all node pairs of h [N_g×D]. Rows with norm below
/// 1e-12 contribute zero to their pairs.
Tensor orthogonal_loss(const Tensor& h_g);

/// Constant {0,1} matrix: 1 wherever the weighted adjacency is positive.
Tensor binarize_adjacency(const Tensor& a);

/// Mean over batch and time: [B×T×n×D] -> [n×D].
Tensor time_batch_mean(const Tensor& h);

/// Assemble the complete objective from one forward pass. Predictions are
/// rescaled to original units (y_hat·std + mean) before the masked MAE;
/// reconstruction and orthogonality use the last layer's time-averaged
/// hierarchy features.
LossBreakdown total_objective(const ForwardResult& fwd, const Tensor& y,
                              const Tensor& y_mask, const HiestGraphs& graphs,
                              double norm_mean, double norm_std);

}  // namespace hiest
