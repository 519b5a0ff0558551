#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hiest/checkpoint.hpp"
#include "hiest/data.hpp"
#include "hiest/losses.hpp"
#include "hiest/model.hpp"

namespace hiest {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;  // decoupled
    double clip_norm = 5.0;      // global gradient-norm clip, 0 disables
};

/// Adaptive-moment optimizer with decoupled weight decay. step() clips the
/// global gradient norm, applies the update, then zeroes gradients. Throws
/// on non-finite gradients, naming the parameter.
class AdamW {
public:
    AdamW(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg);

    void step();
    int64_t step_count() const { return t_; }
    void set_step_count(int64_t t) { t_ = t; }

    /// Moment tensors, named adam.m.<param> / adam.v.<param>, for resume.
    std::vector<std::pair<std::string, Tensor>> state_tensors() const;
    void load_state(const Checkpoint& ckpt);

    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<std::pair<std::string, Tensor>> params_;
    std::vector<Tensor> m_, v_;
    AdamConfig cfg_;
    int64_t t_ = 0;
};

struct HorizonMetrics {
    std::size_t horizon = 0;  // steps ahead, 1-based; 0 marks the overall row
    double mae = 0.0;
    std::optional<double> mape_pct;  // absent when every target is masked out
    double rmse = 0.0;
};

struct MetricReport {
    std::vector<HorizonMetrics> horizons;  // the {3, 6, 12}-step rows that fit
    HorizonMetrics overall;

    std::string to_table() const;
    std::string to_csv() const;
};

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t max_epochs = 100;
    std::size_t patience = 15;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    uint64_t seed = 0;
    bool time_features = false;
    std::string out_dir;  // empty = no files written
    std::string resume_path;
};

struct TrainResult {
    HiestParams best_params;
    double best_val_mae = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    int64_t steps = 0;
    std::vector<std::string> step_log;   // "step,l_pre,l_rec_ro,l_rec_gr,l_ort,total"
    std::vector<std::string> epoch_log;  // "epoch,val_mae,val_mape,val_rmse"
};

struct TrainSetup {
    const ReadingsFrame* frame = nullptr;
    const WindowedData* windows = nullptr;
    NormStats stats;
    bool time_features = false;
};

/// Shuffled mini-batch epochs over the train windows; per-epoch validation
/// MAE drives early stopping and best-checkpoint selection. Aborts with the
/// step index and loss breakdown if the loss goes non-finite.
TrainResult train(HiestModel& model, const TrainSetup& data, const TrainConfig& cfg);

/// De-standardized masked metrics over a window set, per horizon and overall.
MetricReport evaluate(const HiestModel& model, const ReadingsFrame& frame,
                      const SplitWindows& split, const NormStats& stats,
                      bool time_features, std::size_t batch_size = 256);

/// Last-value persistence baseline over the same windows: predict X[t] for
/// every future step. Returns the overall masked MAE.
double persistence_mae(const ReadingsFrame& frame, const SplitWindows& split,
                       std::size_t history, std::size_t horizon);

}  // namespace hiest
