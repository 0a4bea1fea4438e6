#include "taseg/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "taseg/dtw.hpp"
#include "taseg/errors.hpp"
#include "taseg/eval.hpp"

namespace taseg::training {

using nlohmann::json;

void TrainConfig::validate() const {
    if (label_length < 1) throw ConfigError("train: label_length must be >= 1");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("train: tau must lie in (0, 1)");
    if (beta < 0.0) throw ConfigError("train: beta must be >= 0");
    if (!(gamma > 0.0)) throw ConfigError("train: gamma must be > 0");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
}

double classification_loss(double s_global, int y) {
    if (!(s_global > 0.0 && s_global < 1.0))
        throw NumericError("classification_loss: score outside (0,1); clamp first");
    return y != 0 ? -std::log(s_global) : -std::log1p(-s_global);
}

AlignmentResult alignment_loss(const pseudolabel::SequentialLabel& pos,
                               const pseudolabel::SequentialLabel& neg,
                               std::span<const double> local_scores,
                               double beta, double gamma) {
    if (pos.size() != neg.size())
        throw ConfigError("alignment_loss: pseudo-label length mismatch");
    if (!(gamma > 0.0)) throw ConfigError("alignment_loss: gamma must be > 0");
    const std::size_t T = local_scores.size();

    AlignmentResult res;
    res.score_grads.assign(T, 0.0);

    // Identical all-zero labels give two identical soft-DTW terms; the hinge
    // would be a constant beta with zero gradient, so the term is skipped.
    if (pos.all_zero() && neg.all_zero()) return res;

    const double inv_t = 1.0 / static_cast<double>(T);
    auto pos_costs = dtw::build_cost_matrix(pos, local_scores);
    auto neg_costs = dtw::build_cost_matrix(neg, local_scores);
    auto [pos_value, pos_ws] = dtw::sdtw_forward(pos_costs, gamma);
    auto [neg_value, neg_ws] = dtw::sdtw_forward(neg_costs, gamma);

    const double hinge = inv_t * pos_value - inv_t * neg_value + beta;
    if (hinge <= 0.0) return res;

    res.value = hinge;
    const auto pos_grad = dtw::sdtw_backward(pos_costs, pos_ws);
    const auto neg_grad = dtw::sdtw_backward(neg_costs, neg_ws);
    const auto g_pos = dtw::chain_cost_grad_to_scores(pos, local_scores, pos_grad);
    const auto g_neg = dtw::chain_cost_grad_to_scores(neg, local_scores, neg_grad);
    for (std::size_t t = 0; t < T; ++t)
        res.score_grads[t] = inv_t * (g_pos[t] - g_neg[t]);
    return res;
}

SelectedThreshold select_threshold(std::span<const double> global_scores,
                                   std::span<const std::uint8_t> labels) {
    if (global_scores.size() != labels.size())
        throw DataError("select_threshold: length mismatch");
    if (global_scores.empty()) throw DataError("select_threshold: empty input");

    const bool any_pos = std::any_of(labels.begin(), labels.end(),
                                     [](std::uint8_t v) { return v != 0; });
    const bool any_neg = std::any_of(labels.begin(), labels.end(),
                                     [](std::uint8_t v) { return v == 0; });
    SelectedThreshold sel;
    if (!any_pos || !any_neg) {
        // Single-class validation set: predict all-normal and flag it.
        sel.tau_star = *std::max_element(global_scores.begin(), global_scores.end()) + 1.0;
        sel.validation_f1 =
            eval::instance_metrics(global_scores, labels, sel.tau_star).f1;
        sel.single_class_warning = true;
        return sel;
    }
    auto [report, threshold] = eval::best_threshold_metrics(global_scores, labels);
    sel.tau_star = threshold;
    sel.validation_f1 = report.f1;
    return sel;
}

InstanceStep instance_loss(const model::ScorerModel& m,
                           const series::TemporalInstance& instance, int y,
                           const TrainConfig& config) {
    auto fwd = model::forward(m, instance);

    const double loss_c = classification_loss(fwd.scores.global, y);
    const double sg = fwd.scores.global;
    const double grad_global = (sg - static_cast<double>(y)) / (sg * (1.0 - sg));

    const auto map = pseudolabel::normalize_activation(model::activation_raw(m, fwd.tape));
    const auto bits = pseudolabel::phi(map, config.label_length, config.tau);
    const auto [pos, neg] = pseudolabel::masked_labels(bits, y);
    auto align = alignment_loss(pos, neg, fwd.scores.local, config.beta, config.gamma);

    InstanceStep step;
    step.loss.classification = loss_c;
    step.loss.alignment = align.value;
    step.loss.total = loss_c + align.value;
    step.grads = model::backward(m, fwd.tape, align.score_grads, grad_global);
    step.positive_label_empty = y != 0 && pos.all_zero();
    return step;
}

namespace {

struct ModelParams {
    std::vector<double*> tensors;
    std::vector<std::size_t> sizes;
};

ModelParams param_views(model::ScorerModel& m) {
    ModelParams p;
    for (auto& layer : m.layers) {
        p.tensors.push_back(layer.weights.data());
        p.sizes.push_back(layer.weights.size());
        p.tensors.push_back(layer.bias.data());
        p.sizes.push_back(layer.bias.size());
    }
    p.tensors.push_back(m.anomaly_weight.data());
    p.sizes.push_back(m.anomaly_weight.size());
    return p;
}

std::vector<const double*> grad_views(const model::Gradients& g) {
    std::vector<const double*> out;
    for (std::size_t i = 0; i < g.layer_weights.size(); ++i) {
        out.push_back(g.layer_weights[i].data());
        out.push_back(g.layer_bias[i].data());
    }
    out.push_back(g.anomaly_weight.data());
    return out;
}

std::vector<double*> grad_views(model::Gradients& g) {
    std::vector<double*> out;
    for (std::size_t i = 0; i < g.layer_weights.size(); ++i) {
        out.push_back(g.layer_weights[i].data());
        out.push_back(g.layer_bias[i].data());
    }
    out.push_back(g.anomaly_weight.data());
    return out;
}

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_step(model::ScorerModel& m, const model::Gradients& grads,
               model::Gradients& state_m, model::Gradients& state_v,
               std::size_t step, double lr) {
    auto params = param_views(m);
    auto g = grad_views(grads);
    auto mo = grad_views(state_m);
    auto vo = grad_views(state_v);

    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
    for (std::size_t tn = 0; tn < params.tensors.size(); ++tn) {
        double* p = params.tensors[tn];
        const double* gr = g[tn];
        double* mm = mo[tn];
        double* vv = vo[tn];
        for (std::size_t i = 0; i < params.sizes[tn]; ++i) {
            mm[i] = kAdamBeta1 * mm[i] + (1.0 - kAdamBeta1) * gr[i];
            vv[i] = kAdamBeta2 * vv[i] + (1.0 - kAdamBeta2) * gr[i] * gr[i];
            const double mhat = mm[i] / bc1;
            const double vhat = vv[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
        }
    }
}

std::vector<series::TemporalInstance> normalized_instances(const series::Dataset& set,
                                                           const series::Normalization& stats) {
    std::vector<series::TemporalInstance> out;
    out.reserve(set.size());
    for (const auto& e : set.entries) out.push_back(series::normalized(e.instance, stats));
    return out;
}

} // namespace

TrainResult train(model::ScorerModel initial, const series::Dataset& train_set,
                  const series::Dataset& valid_set, const TrainConfig& config,
                  const TrainState* resume) {
    config.validate();
    if (train_set.entries.empty()) throw DataError("train: empty training split");
    if (valid_set.entries.empty()) throw DataError("train: empty validation split");
    train_set.validate();
    valid_set.validate();

    const series::Normalization stats = train_set.normalization
                                            ? *train_set.normalization
                                            : series::compute_normalization(train_set);
    const auto train_instances = normalized_instances(train_set, stats);
    const auto valid_instances = normalized_instances(valid_set, stats);

    std::vector<std::uint8_t> valid_labels;
    for (const auto& e : valid_set.entries)
        valid_labels.push_back(static_cast<std::uint8_t>(e.label));

    TrainResult result;
    model::ScorerModel current = resume ? resume->last_model : std::move(initial);
    if (train_set.d_vars() != current.input_dim)
        throw DataError("train: dataset has " + std::to_string(train_set.d_vars()) +
                        " variables, model expects " + std::to_string(current.input_dim));

    TrainState state;
    if (resume) {
        state = *resume;
    } else {
        state.adam_m = model::Gradients::zeros_like(current);
        state.adam_v = model::Gradients::zeros_like(current);
        state.best_model = current;
    }

    std::mt19937_64 rng(config.seed);
    if (resume && !state.rng_state.empty()) {
        std::istringstream in(state.rng_state);
        in >> rng;
    }

    const std::size_t n_train = train_instances.size();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = state.epochs_done; epoch < config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);

        double sum_c = 0.0, sum_a = 0.0;
        std::size_t allzero_pos = 0;
        for (std::size_t begin = 0; begin < n_train; begin += config.batch_size) {
            const std::size_t end = std::min(begin + config.batch_size, n_train);
            auto batch_grads = model::Gradients::zeros_like(current);
            double batch_loss = 0.0;
            for (std::size_t b = begin; b < end; ++b) {
                const std::size_t idx = order[b];
                const int y = train_set.entries[idx].label;
                auto step = instance_loss(current, train_instances[idx], y, config);
                if (!std::isfinite(step.loss.total))
                    throw NumericError(
                        "train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                        ", instance " + train_set.entries[idx].instance.id +
                        " (classification=" + std::to_string(step.loss.classification) +
                        ", alignment=" + std::to_string(step.loss.alignment) + ")");
                if (step.positive_label_empty) ++allzero_pos;
                sum_c += step.loss.classification;
                sum_a += step.loss.alignment;
                batch_loss += step.loss.total;
                batch_grads.add(step.grads);
            }
            (void)batch_loss;
            batch_grads.scale(1.0 / static_cast<double>(end - begin));
            ++state.adam_step;
            adam_step(current, batch_grads, state.adam_m, state.adam_v, state.adam_step,
                      config.learning_rate);
        }

        // Validation pass: global scores at the epoch's best threshold.
        std::vector<double> valid_scores;
        valid_scores.reserve(valid_instances.size());
        for (const auto& inst : valid_instances)
            valid_scores.push_back(model::forward(current, inst).scores.global);
        const auto selected = select_threshold(valid_scores, valid_labels);

        EpochStats stats_row;
        stats_row.epoch = epoch + 1;
        stats_row.loss_c = sum_c / static_cast<double>(n_train);
        stats_row.loss_a = sum_a / static_cast<double>(n_train);
        stats_row.loss = stats_row.loss_c + stats_row.loss_a;
        stats_row.val_f1 = selected.validation_f1;
        stats_row.tau_star = selected.tau_star;
        result.history.push_back(stats_row);
        if (allzero_pos > 0)
            std::clog << "[train] epoch " << stats_row.epoch << ": positive pseudo-label "
                      << "all-zero for " << allzero_pos << " instance(s)\n";

        // Ties keep the later epoch: the alignment loss keeps sharpening the
        // local scores after instance-level F1 saturates. Patience counts
        // strict improvements only.
        if (selected.validation_f1 >= state.best_val_f1) {
            if (selected.validation_f1 > state.best_val_f1) state.epochs_since_improve = 0;
            else ++state.epochs_since_improve;
            state.best_val_f1 = selected.validation_f1;
            state.best_threshold = selected;
            state.best_model = current;
        } else {
            ++state.epochs_since_improve;
        }
        state.epochs_done = epoch + 1;
        if (state.epochs_since_improve >= config.patience) break;
    }

    state.last_model = current;
    {
        std::ostringstream out;
        out << rng;
        state.rng_state = out.str();
    }

    result.best_model = state.best_model;
    result.threshold = state.best_threshold;
    result.state = std::move(state);
    return result;
}

namespace {

json gradients_to_json(const model::Gradients& g) {
    json doc;
    doc["layer_weights"] = g.layer_weights;
    doc["layer_bias"] = g.layer_bias;
    doc["anomaly_weight"] = g.anomaly_weight;
    return doc;
}

model::Gradients gradients_from_json(const json& doc) {
    model::Gradients g;
    g.layer_weights = doc.at("layer_weights").get<std::vector<std::vector<double>>>();
    g.layer_bias = doc.at("layer_bias").get<std::vector<std::vector<double>>>();
    g.anomaly_weight = doc.at("anomaly_weight").get<std::vector<double>>();
    return g;
}

} // namespace

void TrainState::save(const std::filesystem::path& path) const {
    json doc;
    doc["schema"] = "taseg-train-state-v1";
    doc["epochs_done"] = epochs_done;
    doc["adam_step"] = adam_step;
    doc["epochs_since_improve"] = epochs_since_improve;
    doc["best_val_f1"] = best_val_f1;
    doc["best_tau_star"] = best_threshold.tau_star;
    doc["best_tau_f1"] = best_threshold.validation_f1;
    doc["best_tau_warning"] = best_threshold.single_class_warning;
    doc["adam_m"] = gradients_to_json(adam_m);
    doc["adam_v"] = gradients_to_json(adam_v);
    doc["rng_state"] = rng_state;
    doc["last_model"] = last_model.to_json();
    doc["best_model"] = best_model.to_json();

    std::ofstream out(path);
    if (!out) throw DataError("cannot write train state " + path.string());
    out << doc.dump() << '\n';
}

TrainState TrainState::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open train state " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& ex) {
        throw DataError(path.string() + ": " + ex.what());
    }

    try {
        TrainState state;
        state.epochs_done = doc.at("epochs_done").get<std::size_t>();
        state.adam_step = doc.at("adam_step").get<std::size_t>();
        state.epochs_since_improve = doc.at("epochs_since_improve").get<std::size_t>();
        state.best_val_f1 = doc.at("best_val_f1").get<double>();
        state.best_threshold.tau_star = doc.at("best_tau_star").get<double>();
        state.best_threshold.validation_f1 = doc.at("best_tau_f1").get<double>();
        state.best_threshold.single_class_warning = doc.at("best_tau_warning").get<bool>();
        state.adam_m = gradients_from_json(doc.at("adam_m"));
        state.adam_v = gradients_from_json(doc.at("adam_v"));
        state.rng_state = doc.at("rng_state").get<std::string>();
        state.last_model = model::ScorerModel::from_json(doc.at("last_model"));
        state.best_model = model::ScorerModel::from_json(doc.at("best_model"));
        return state;
    } catch (const json::exception& ex) {
        throw DataError(path.string() + ": malformed train state: " + ex.what());
    }
}

} // namespace taseg::training
