#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taseg/model.hpp"
#include "taseg/series.hpp"

// Test-time segmentation: score the instance, mask the pseudo-label by the
// predicted instance label, decode the hard DTW path, and emit segments.

namespace taseg::inference {

// Inclusive 1-based point indices.
struct Segment {
    std::size_t start = 0;
    std::size_t end = 0;
    int label = 0;
};

// Segments tile 1..T exactly; adjacent same-label segments are merged.
struct Segmentation {
    std::vector<Segment> segments;

    bool tiles(std::size_t length) const;
};

struct SegmentationParams {
    std::size_t label_length = 8; // L
    double tau = 0.5;             // pseudo-label threshold (training value)
    double tau_star = 0.5;        // instance threshold from validation
};

struct InstanceResult {
    Segmentation segmentation;
    std::vector<std::uint8_t> point_predictions;
    std::vector<double> local_scores;
    double global_score = 0.0;
};

// Expects an instance already normalized with the train-split statistics.
InstanceResult segment_instance(const model::ScorerModel& m,
                                const series::TemporalInstance& instance,
                                const SegmentationParams& params);

struct DatasetItemResult {
    std::string id;
    std::optional<InstanceResult> result;
    std::string error; // set when result is empty
};

// Maps segment_instance over the dataset in id order, applying the dataset's
// normalization when present. Per-instance failures are recorded without
// aborting the batch.
std::vector<DatasetItemResult> segment_dataset(const model::ScorerModel& m,
                                               const series::Dataset& dataset,
                                               const SegmentationParams& params);

} // namespace taseg::inference
