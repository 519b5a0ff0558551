#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hiest/graph.hpp"
#include "hiest/tensor.hpp"

namespace hiest {

/// Sensor readings on a uniform time grid. Missing cells are forward-filled
/// in `values` and flagged in `missing`; flagged targets never enter losses
/// or metrics.
struct ReadingsFrame {
    std::vector<std::string> timestamps;  // ISO-8601, strictly increasing
    std::vector<std::string> sensor_ids;
    std::vector<double> values;    // [T × N], row-major
    std::vector<uint8_t> missing;  // [T × N], 1 = cell was empty in the file
    int64_t interval_seconds = 0;

    std::size_t num_steps() const { return timestamps.size(); }
    std::size_t num_sensors() const { return sensor_ids.size(); }
    double value(std::size_t t, std::size_t n) const { return values[t * num_sensors() + n]; }
    bool is_missing(std::size_t t, std::size_t n) const {
        return missing[t * num_sensors() + n] != 0;
    }
    /// Fraction of originally-missing cells per sensor.
    std::vector<double> missing_rates() const;
    /// Minutes-of-day of step t, scaled to [0, 1).
    double time_of_day(std::size_t t) const;
};

/// CSV with header "timestamp,<id>,...". Empty cells become missing markers,
/// never zeros. Throws FormatError (with line number) on ragged rows or
/// non-monotonic / non-uniform timestamps.
ReadingsFrame load_readings(const std::string& path);
void write_readings(const ReadingsFrame& frame, const std::string& path);

struct DistanceRecord {
    std::string from, to;
    double meters = 0.0;
};

/// CSV "from_id,to_id,distance"; a non-numeric first row is treated as a
/// header. Throws FormatError with the offending line number.
std::vector<DistanceRecord> load_distances(const std::string& path);
void write_distances(const std::vector<DistanceRecord>& records, const std::string& path);

/// Resolve string ids against a fixed node ordering.
std::vector<DistanceEntry> index_distances(const std::vector<DistanceRecord>& records,
                                           const std::vector<std::string>& node_ids);
/// Node order = first appearance in the records.
std::vector<std::string> collect_node_ids(const std::vector<DistanceRecord>& records);

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

struct SplitWindows {
    std::size_t segment_begin = 0;  // first frame row of the split segment
    std::size_t segment_len = 0;
    std::vector<std::size_t> starts;  // absolute frame row of each window's X
};

struct WindowedData {
    std::size_t history = 0;  // H
    std::size_t horizon = 0;  // T
    SplitWindows train, val, test;
};

/// Chronological split by ratio, then sliding windows of length H+T with
/// stride 1 inside each segment. A window never crosses a split boundary.
/// Throws DataError if the ratios do not sum to 1 or a segment is shorter
/// than one window.
WindowedData split_and_window(const ReadingsFrame& frame, double train_ratio,
                              double val_ratio, double test_ratio, std::size_t history,
                              std::size_t horizon);

struct NormStats {
    double mean = 0.0;
    double std_dev = 1.0;
};

/// Mean/std of the primary feature over the train segment's observed cells.
/// Throws DataError when the std is zero.
NormStats compute_norm_stats(const ReadingsFrame& frame, const SplitWindows& train);

struct ForecastBatch {
    Tensor x;       // [B×H×N×D_in], primary feature standardized
    Tensor y;       // [B×T×N×1], original units
    Tensor y_mask;  // [B×T×N×1], 1 = target observed
};

/// Materialize windows into batch tensors. X's primary feature is
/// standardized; an optional second channel carries time-of-day in [0,1).
ForecastBatch assemble_batch(const ReadingsFrame& frame, const NormStats& stats,
                             const std::vector<std::size_t>& window_starts,
                             std::size_t history, std::size_t horizon, bool time_features);

// ---------------------------------------------------------------------------
// Synthetic hierarchical datasets
// ---------------------------------------------------------------------------

struct SynthSpec {
    std::size_t n_regions = 4;
    std::size_t nodes_per_region = 5;
    std::size_t n_patterns = 2;
    std::size_t t_total = 2000;
    uint64_t seed = 0;
    double noise_sigma = 2.0;
};

struct PlantedTruth {
    std::vector<std::size_t> region_of_node;   // home region per node
    std::vector<std::size_t> pattern_of_region;
    std::vector<std::string> cut_vertex_ids;
};

struct SynthResult {
    SensorGraph graph;
    ReadingsFrame frame;
    std::vector<DistanceRecord> distances;
    PlantedTruth truth;
};

/// Planted hierarchy: each region is a biconnected ring (plus a chord when
/// large enough) and consecutive regions share a single cut vertex. Every
/// region follows one of `n_patterns` sinusoid-mixture archetypes; nodes add
/// iid Gaussian noise on top. The distance table lists all pairs, with edge
/// pairs close enough to survive the kernel threshold and non-edges far
/// beyond it, so build_adjacency reproduces the planted topology.
SynthResult synth_hierarchical(const SynthSpec& spec);

void write_planted_truth(const SynthResult& result, const std::string& path);

}  // namespace hiest
