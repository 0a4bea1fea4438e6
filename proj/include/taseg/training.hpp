#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taseg/model.hpp"
#include "taseg/pseudolabel.hpp"
#include "taseg/series.hpp"

// Training loop: per-instance loss assembly (classification + margin
// alignment), gradient accumulation, Adam updates, and validation-driven
// stopping with threshold selection.

namespace taseg::training {

struct TrainConfig {
    std::size_t label_length = 8; // L
    double tau = 0.5;
    double beta = 0.5;
    double gamma = 0.1;
    double learning_rate = 1e-3;
    std::size_t batch_size = 16;
    std::size_t max_epochs = 50;
    std::size_t patience = 20;
    std::uint64_t seed = 7;

    void validate() const;
};

struct LossReport {
    double classification = 0.0;
    double alignment = 0.0;
    double total = 0.0;
};

struct SelectedThreshold {
    double tau_star = 0.0;
    double validation_f1 = 0.0;
    bool single_class_warning = false;
};

struct EpochStats {
    std::size_t epoch = 0;
    double loss_c = 0.0;
    double loss_a = 0.0;
    double loss = 0.0;
    double val_f1 = 0.0;
    double tau_star = 0.0;
};

// -(y log s_* + (1-y) log(1-s_*)) on a clamped score.
double classification_loss(double s_global, int y);

struct AlignmentResult {
    double value = 0.0;
    std::vector<double> score_grads; // d(value)/d(s_t), length T
};

// Hinge on the normalized soft-DTW gap between the positive and negative
// pseudo-labels. Zero value and zero gradient when the hinge is inactive or
// when both labels are all-zero (identical terms).
AlignmentResult alignment_loss(const pseudolabel::SequentialLabel& pos,
                               const pseudolabel::SequentialLabel& neg,
                               std::span<const double> local_scores,
                               double beta, double gamma);

// Candidate thresholds are midpoints of consecutive sorted unique scores
// plus below-min/above-max sentinels; maximizes instance-level F1, smallest
// threshold on ties. Single-class labels yield the all-normal threshold with
// a warning flag.
SelectedThreshold select_threshold(std::span<const double> global_scores,
                                   std::span<const std::uint8_t> labels);

// One instance's full loss and parameter gradients (classification +
// alignment paths, pseudo-labels re-derived from the current model).
struct InstanceStep {
    LossReport loss;
    model::Gradients grads;
    // y = 1 but every activation fell below tau, so the positive pseudo-label
    // came out all-zero; surfaced in the training log.
    bool positive_label_empty = false;
};
InstanceStep instance_loss(const model::ScorerModel& m,
                           const series::TemporalInstance& instance, int y,
                           const TrainConfig& config);

// Optimizer/progress state carried across train() calls for resume.
struct TrainState {
    std::size_t epochs_done = 0;
    std::size_t adam_step = 0;
    std::size_t epochs_since_improve = 0;
    double best_val_f1 = -1.0;
    SelectedThreshold best_threshold;
    model::Gradients adam_m;
    model::Gradients adam_v;
    model::ScorerModel last_model;  // parameters after the last epoch
    model::ScorerModel best_model;  // parameters of the best validation epoch
    std::string rng_state;

    void save(const std::filesystem::path& path) const;
    static TrainState load(const std::filesystem::path& path);
};

struct TrainResult {
    model::ScorerModel best_model;
    SelectedThreshold threshold;
    std::vector<EpochStats> history;
    TrainState state;
};

// Instances are normalized with the train split's statistics (from the
// dataset manifest when present, computed otherwise). Deterministic for a
// fixed seed. Throws NumericError on non-finite loss.
TrainResult train(model::ScorerModel initial, const series::Dataset& train_set,
                  const series::Dataset& valid_set, const TrainConfig& config,
                  const TrainState* resume = nullptr);

} // namespace taseg::training
