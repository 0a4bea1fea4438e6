#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// Data model for temporal instances and datasets, CSV/JSON ingestion, and a
// synthetic generator producing weakly labeled data with hidden point-level
// ground truth.

namespace taseg::series {

// A D x T multivariate series, row-major: values[v * length + t].
struct TemporalInstance {
    std::string id;
    std::size_t d_vars = 0;
    std::size_t length = 0;
    std::vector<double> values;

    double at(std::size_t v, std::size_t t) const { return values[v * length + t]; }
    double& at(std::size_t v, std::size_t t) { return values[v * length + t]; }
    const double* row(std::size_t v) const { return values.data() + v * length; }
    double* row(std::size_t v) { return values.data() + v * length; }

    // Throws DataError on NaN/Inf entries or shape mismatch.
    void validate() const;
};

using PointLabels = std::vector<std::uint8_t>;

// Per-variable z-normalization statistics, computed on the train split and
// applied to all splits.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;
};

struct DatasetEntry {
    TemporalInstance instance;
    int label = 0; // 1 = at least one anomalous event in the instance
    std::optional<PointLabels> point_labels;
};

struct Dataset {
    std::vector<DatasetEntry> entries; // ordered by lexicographic id
    std::string split_tag;             // train / valid / test
    std::optional<Normalization> normalization;

    std::size_t size() const { return entries.size(); }
    std::size_t d_vars() const { return entries.empty() ? 0 : entries.front().instance.d_vars; }

    // Cross-entry invariants: unique ids, shared D, label consistency with
    // point labels when present.
    void validate() const;
};

struct SynthConfig {
    std::size_t instances = 100;
    std::size_t d_vars = 3;
    std::size_t length = 500;
    double anomaly_ratio = 0.05;   // target fraction of anomalous points
    int anomalous_instances = -1;  // -1: derive the count from anomaly_ratio
    std::size_t segment_min = 20;  // injected segment length bounds
    std::size_t segment_max = 60;
    double noise_std = 0.05;

    void validate() const;
};

// Directory layout: <root>/instances/<id>.csv, <root>/labels.csv, optional
// <root>/point_labels/<id>.csv, <root>/manifest.json.
Dataset load_dataset(const std::filesystem::path& root);
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

// Consecutive non-overlapping chunks; a trailing partial chunk is dropped.
std::vector<TemporalInstance> split_stream(const TemporalInstance& stream,
                                           std::size_t chunk_length);

// Deterministic for a fixed seed. Base signals are per-variable sinusoids
// plus Gaussian noise; each anomalous instance receives 1-3 injected
// segments (mean shift, amplitude scaling, or frequency change).
Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed);

Normalization compute_normalization(const Dataset& train);
TemporalInstance normalized(const TemporalInstance& instance, const Normalization& stats);

// Stratified split by instance label; ratio parts as in 5:2:3.
std::array<Dataset, 3> split_dataset(const Dataset& dataset,
                                     const std::array<std::size_t, 3>& ratio,
                                     std::uint64_t seed);

} // namespace taseg::series
