#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "taseg/series.hpp"

// Dilated causal CNN scorer: forward pass producing per-point features and
// anomaly scores, and an analytic reverse pass producing parameter gradients.

namespace taseg::model {

enum class Pooling { max, avg };

const char* pooling_name(Pooling p);
Pooling pooling_from_name(const std::string& name);

struct ConvLayer {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t taps = 0;    // filter size k
    std::size_t dilation = 1;
    std::vector<double> weights; // [out][in][tap]
    std::vector<double> bias;    // [out]

    double weight(std::size_t oc, std::size_t ic, std::size_t j) const {
        return weights[(oc * in_channels + ic) * taps + j];
    }
};

struct ScorerModel {
    std::size_t input_dim = 0;  // D
    std::size_t hidden_dim = 0; // d
    std::size_t filter_size = 0; // k
    Pooling pooling = Pooling::max;
    double clamp_eps = 1e-7;
    std::vector<ConvLayer> layers;       // layer i has dilation k^i (0-based)
    std::vector<double> anomaly_weight;  // w, size d

    std::size_t n_layers() const { return layers.size(); }
    std::size_t receptive_field() const; // k^n

    // Uniform fan-in initialization: conv weights U(-a, a) with
    // a = sqrt(1/(in_channels*k)); w is U(-sqrt(1/d), sqrt(1/d)).
    static ScorerModel init(std::size_t input_dim, std::size_t hidden_dim,
                            std::size_t filter_size, std::size_t n_layers,
                            Pooling pooling, std::mt19937_64& rng);

    nlohmann::json to_json() const;
    static ScorerModel from_json(const nlohmann::json& doc);
    void save(const std::filesystem::path& path) const;
    static ScorerModel load(const std::filesystem::path& path);
};

// Columns are the per-point output vectors h_t; pooled is h_*.
struct FeatureSequence {
    std::size_t dim = 0;    // d
    std::size_t length = 0; // T
    std::vector<double> vectors; // d x T row-major
    std::vector<double> pooled;  // d
};

// Local scores s_t and the global score s_*, all clamped inside (0, 1).
struct ScoreSequence {
    std::vector<double> local;
    double global = 0.5;
};

// Intermediates retained by forward() for the reverse pass.
struct Tape {
    std::size_t length = 0;
    std::vector<std::vector<double>> inputs; // input of each layer
    std::vector<std::vector<double>> pre;    // pre-activation output of each layer
    std::vector<double> pooled;              // d
    std::vector<std::size_t> argmax;         // max pooling: argmax column per dim
    std::vector<double> raw;                 // w . h_t, length T
    double raw_global = 0.0;
    ScoreSequence scores;
    const ScorerModel* owner = nullptr;
};

struct ForwardResult {
    FeatureSequence features;
    ScoreSequence scores;
    Tape tape;
};

struct Gradients {
    std::vector<std::vector<double>> layer_weights;
    std::vector<std::vector<double>> layer_bias;
    std::vector<double> anomaly_weight;

    static Gradients zeros_like(const ScorerModel& m);
    void add(const Gradients& other);
    void scale(double a);
    double max_abs() const;
};

// Causal: h_t depends only on x_{t-k^n+1..t} via left zero-padding.
ForwardResult forward(const ScorerModel& m, const series::TemporalInstance& instance);

// grad_local = dL/ds_t, grad_global = dL/ds_*. Max pooling routes the
// global-path gradient to the argmax column only (smallest t on ties).
Gradients backward(const ScorerModel& m, const Tape& tape,
                   std::span<const double> grad_local, double grad_global);

// The pre-normalization activation map (w . h_1, ..., w . h_T).
const std::vector<double>& activation_raw(const ScorerModel& m, const Tape& tape);

} // namespace taseg::model
