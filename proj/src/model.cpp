#include "taseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "taseg/errors.hpp"
#include "taseg/kernels.hpp"

namespace taseg::model {

using nlohmann::json;

const char* pooling_name(Pooling p) { return p == Pooling::max ? "max" : "avg"; }

Pooling pooling_from_name(const std::string& name) {
    if (name == "max") return Pooling::max;
    if (name == "avg") return Pooling::avg;
    throw ConfigError("unknown pooling mode '" + name + "' (expected max or avg)");
}

std::size_t ScorerModel::receptive_field() const {
    std::size_t field = 1;
    for (std::size_t i = 0; i < layers.size(); ++i) field *= filter_size;
    return field;
}

ScorerModel ScorerModel::init(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t filter_size, std::size_t n_layers,
                              Pooling pooling, std::mt19937_64& rng) {
    if (input_dim < 1 || hidden_dim < 1 || filter_size < 1 || n_layers < 1)
        throw ConfigError("model dimensions must be >= 1");

    ScorerModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.filter_size = filter_size;
    m.pooling = pooling;

    std::size_t dilation = 1;
    for (std::size_t i = 0; i < n_layers; ++i) {
        ConvLayer layer;
        layer.in_channels = i == 0 ? input_dim : hidden_dim;
        layer.out_channels = hidden_dim;
        layer.taps = filter_size;
        layer.dilation = dilation;
        const double bound =
            std::sqrt(1.0 / static_cast<double>(layer.in_channels * filter_size));
        std::uniform_real_distribution<double> dist(-bound, bound);
        layer.weights.resize(layer.out_channels * layer.in_channels * layer.taps);
        layer.bias.assign(layer.out_channels, 0.0);
        for (auto& w : layer.weights) w = dist(rng);
        m.layers.push_back(std::move(layer));
        dilation *= filter_size;
    }

    const double wbound = std::sqrt(1.0 / static_cast<double>(hidden_dim));
    std::uniform_real_distribution<double> wdist(-wbound, wbound);
    m.anomaly_weight.resize(hidden_dim);
    for (auto& w : m.anomaly_weight) w = wdist(rng);
    return m;
}

namespace {

inline double clamped_sigmoid(double x, double eps) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return std::min(std::max(s, eps), 1.0 - eps);
}

// out[oc][t] += sum_ic sum_j W[oc][ic][j] * in[ic][t - (k-1-j)*dil], with
// zero left-padding: contributions for t < offset are dropped.
void conv_forward(const ConvLayer& layer, const double* in, double* out, std::size_t T) {
    for (std::size_t oc = 0; oc < layer.out_channels; ++oc) {
        double* out_row = out + oc * T;
        std::fill(out_row, out_row + T, layer.bias[oc]);
        for (std::size_t ic = 0; ic < layer.in_channels; ++ic) {
            const double* in_row = in + ic * T;
            for (std::size_t j = 0; j < layer.taps; ++j) {
                const std::size_t offset = (layer.taps - 1 - j) * layer.dilation;
                if (offset >= T) continue;
                kernels::axpy(out_row + offset, in_row, layer.weight(oc, ic, j), T - offset);
            }
        }
    }
}

void conv_backward(const ConvLayer& layer, const double* in, const double* grad_out,
                   std::size_t T, double* grad_in, std::vector<double>& grad_weights,
                   std::vector<double>& grad_bias) {
    grad_weights.assign(layer.weights.size(), 0.0);
    grad_bias.assign(layer.bias.size(), 0.0);
    if (grad_in) std::fill(grad_in, grad_in + layer.in_channels * T, 0.0);

    for (std::size_t oc = 0; oc < layer.out_channels; ++oc) {
        const double* g_row = grad_out + oc * T;
        grad_bias[oc] = kernels::sum(g_row, T);
        for (std::size_t ic = 0; ic < layer.in_channels; ++ic) {
            const double* in_row = in + ic * T;
            for (std::size_t j = 0; j < layer.taps; ++j) {
                const std::size_t offset = (layer.taps - 1 - j) * layer.dilation;
                if (offset >= T) continue;
                const std::size_t n = T - offset;
                grad_weights[(oc * layer.in_channels + ic) * layer.taps + j] =
                    kernels::dot(g_row + offset, in_row, n);
                if (grad_in)
                    kernels::axpy(grad_in + ic * T, g_row + offset,
                                  layer.weight(oc, ic, j), n);
            }
        }
    }
}

void check_tape(const ScorerModel& m, const Tape& tape) {
    if (tape.owner != &m || tape.pre.size() != m.n_layers())
        throw ConfigError("tape does not belong to this model");
}

} // namespace

ForwardResult forward(const ScorerModel& m, const series::TemporalInstance& instance) {
    if (m.layers.empty()) throw ConfigError("forward: model has no layers");
    if (instance.d_vars != m.input_dim)
        throw DataError("forward: instance has " + std::to_string(instance.d_vars) +
                        " variables, model expects " + std::to_string(m.input_dim));
    const std::size_t T = instance.length;
    const std::size_t d = m.hidden_dim;
    const std::size_t n = m.n_layers();

    ForwardResult res;
    Tape& tape = res.tape;
    tape.length = T;
    tape.owner = &m;
    tape.inputs.resize(n);
    tape.pre.resize(n);

    tape.inputs[0] = instance.values;
    for (std::size_t i = 0; i < n; ++i) {
        tape.pre[i].assign(m.layers[i].out_channels * T, 0.0);
        conv_forward(m.layers[i], tape.inputs[i].data(), tape.pre[i].data(), T);
        if (i + 1 < n) {
            // ReLU between conv layers; the final layer output stays linear.
            tape.inputs[i + 1].resize(d * T);
            kernels::relu(tape.inputs[i + 1].data(), tape.pre[i].data(), d * T);
        }
    }
    const std::vector<double>& h = tape.pre[n - 1];

    tape.pooled.assign(d, 0.0);
    tape.argmax.assign(d, 0);
    if (m.pooling == Pooling::max) {
        for (std::size_t dd = 0; dd < d; ++dd) {
            const double* row = h.data() + dd * T;
            std::size_t best = 0;
            for (std::size_t t = 1; t < T; ++t)
                if (row[t] > row[best]) best = t; // ties keep the smallest t
            tape.argmax[dd] = best;
            tape.pooled[dd] = row[best];
        }
    } else {
        for (std::size_t dd = 0; dd < d; ++dd)
            tape.pooled[dd] = kernels::sum(h.data() + dd * T, T) / static_cast<double>(T);
    }

    tape.raw.assign(T, 0.0);
    for (std::size_t dd = 0; dd < d; ++dd)
        kernels::axpy(tape.raw.data(), h.data() + dd * T, m.anomaly_weight[dd], T);
    tape.raw_global = kernels::dot(m.anomaly_weight.data(), tape.pooled.data(), d);

    tape.scores.local.resize(T);
    for (std::size_t t = 0; t < T; ++t)
        tape.scores.local[t] = clamped_sigmoid(tape.raw[t], m.clamp_eps);
    tape.scores.global = clamped_sigmoid(tape.raw_global, m.clamp_eps);

    res.features.dim = d;
    res.features.length = T;
    res.features.vectors = h;
    res.features.pooled = tape.pooled;
    res.scores = tape.scores;
    return res;
}

Gradients Gradients::zeros_like(const ScorerModel& m) {
    Gradients g;
    g.layer_weights.resize(m.n_layers());
    g.layer_bias.resize(m.n_layers());
    for (std::size_t i = 0; i < m.n_layers(); ++i) {
        g.layer_weights[i].assign(m.layers[i].weights.size(), 0.0);
        g.layer_bias[i].assign(m.layers[i].bias.size(), 0.0);
    }
    g.anomaly_weight.assign(m.anomaly_weight.size(), 0.0);
    return g;
}

void Gradients::add(const Gradients& other) {
    for (std::size_t i = 0; i < layer_weights.size(); ++i) {
        kernels::axpy(layer_weights[i].data(), other.layer_weights[i].data(), 1.0,
                      layer_weights[i].size());
        kernels::axpy(layer_bias[i].data(), other.layer_bias[i].data(), 1.0,
                      layer_bias[i].size());
    }
    kernels::axpy(anomaly_weight.data(), other.anomaly_weight.data(), 1.0,
                  anomaly_weight.size());
}

void Gradients::scale(double a) {
    for (auto& w : layer_weights)
        for (auto& v : w) v *= a;
    for (auto& b : layer_bias)
        for (auto& v : b) v *= a;
    for (auto& v : anomaly_weight) v *= a;
}

double Gradients::max_abs() const {
    double best = 0.0;
    for (const auto& w : layer_weights)
        for (double v : w) best = std::max(best, std::abs(v));
    for (const auto& b : layer_bias)
        for (double v : b) best = std::max(best, std::abs(v));
    for (double v : anomaly_weight) best = std::max(best, std::abs(v));
    return best;
}

Gradients backward(const ScorerModel& m, const Tape& tape,
                   std::span<const double> grad_local, double grad_global) {
    check_tape(m, tape);
    const std::size_t T = tape.length;
    if (grad_local.size() != T)
        throw ConfigError("backward: grad_local length mismatch");
    const std::size_t d = m.hidden_dim;
    const std::size_t n = m.n_layers();
    const std::vector<double>& h = tape.pre[n - 1];

    Gradients grads = Gradients::zeros_like(m);

    // Through the sigmoids onto the raw activations.
    std::vector<double> g_raw(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double s = tape.scores.local[t];
        g_raw[t] = grad_local[t] * s * (1.0 - s);
    }
    const double sg = tape.scores.global;
    const double g_raw_global = grad_global * sg * (1.0 - sg);

    // w gradient: local path over all columns plus the pooled vector.
    for (std::size_t dd = 0; dd < d; ++dd)
        grads.anomaly_weight[dd] =
            kernels::dot(g_raw.data(), h.data() + dd * T, T) + g_raw_global * tape.pooled[dd];

    // Gradient on the feature matrix h.
    std::vector<double> g_h(d * T, 0.0);
    for (std::size_t dd = 0; dd < d; ++dd)
        kernels::axpy(g_h.data() + dd * T, g_raw.data(), m.anomaly_weight[dd], T);
    if (m.pooling == Pooling::max) {
        for (std::size_t dd = 0; dd < d; ++dd)
            g_h[dd * T + tape.argmax[dd]] += m.anomaly_weight[dd] * g_raw_global;
    } else {
        for (std::size_t dd = 0; dd < d; ++dd) {
            const double c = m.anomaly_weight[dd] * g_raw_global / static_cast<double>(T);
            double* row = g_h.data() + dd * T;
            for (std::size_t t = 0; t < T; ++t) row[t] += c;
        }
    }

    // Reverse through the layer stack.
    std::vector<double> g_out = std::move(g_h);
    std::vector<double> g_in;
    for (std::size_t i = n; i-- > 0;) {
        if (i + 1 < n) // undo the ReLU applied to this layer's output
            kernels::relu_backward(g_out.data(), g_out.data(), tape.pre[i].data(),
                                   g_out.size());
        const bool need_input_grad = i > 0;
        if (need_input_grad) g_in.assign(m.layers[i].in_channels * T, 0.0);
        conv_backward(m.layers[i], tape.inputs[i].data(), g_out.data(), T,
                      need_input_grad ? g_in.data() : nullptr, grads.layer_weights[i],
                      grads.layer_bias[i]);
        if (need_input_grad) g_out = std::move(g_in);
    }
    return grads;
}

const std::vector<double>& activation_raw(const ScorerModel& m, const Tape& tape) {
    check_tape(m, tape);
    return tape.raw;
}

json ScorerModel::to_json() const {
    json doc;
    doc["schema"] = "taseg-checkpoint-v1";
    doc["input_dim"] = input_dim;
    doc["hidden_dim"] = hidden_dim;
    doc["filter_size"] = filter_size;
    doc["n_layers"] = n_layers();
    doc["pooling"] = pooling_name(pooling);
    doc["clamp_eps"] = clamp_eps;
    doc["anomaly_weight"] = anomaly_weight;

    json layer_docs = json::array();
    for (const auto& layer : layers) {
        json ld;
        ld["dilation"] = layer.dilation;
        ld["bias"] = layer.bias;
        json w3 = json::array();
        for (std::size_t oc = 0; oc < layer.out_channels; ++oc) {
            json w2 = json::array();
            for (std::size_t ic = 0; ic < layer.in_channels; ++ic) {
                json w1 = json::array();
                for (std::size_t j = 0; j < layer.taps; ++j)
                    w1.push_back(layer.weight(oc, ic, j));
                w2.push_back(std::move(w1));
            }
            w3.push_back(std::move(w2));
        }
        ld["weights"] = std::move(w3);
        layer_docs.push_back(std::move(ld));
    }
    doc["layers"] = std::move(layer_docs);
    return doc;
}

void ScorerModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << to_json().dump(2) << '\n';
}

ScorerModel ScorerModel::from_json(const json& doc) {
    try {
        ScorerModel m;
        m.input_dim = doc.at("input_dim").get<std::size_t>();
        m.hidden_dim = doc.at("hidden_dim").get<std::size_t>();
        m.filter_size = doc.at("filter_size").get<std::size_t>();
        m.pooling = pooling_from_name(doc.at("pooling").get<std::string>());
        m.clamp_eps = doc.at("clamp_eps").get<double>();
        m.anomaly_weight = doc.at("anomaly_weight").get<std::vector<double>>();

        for (const auto& ld : doc.at("layers")) {
            ConvLayer layer;
            layer.dilation = ld.at("dilation").get<std::size_t>();
            layer.bias = ld.at("bias").get<std::vector<double>>();
            const auto& w3 = ld.at("weights");
            layer.out_channels = w3.size();
            layer.in_channels = w3.at(0).size();
            layer.taps = w3.at(0).at(0).size();
            layer.weights.reserve(layer.out_channels * layer.in_channels * layer.taps);
            for (const auto& w2 : w3)
                for (const auto& w1 : w2)
                    for (const auto& w : w1) layer.weights.push_back(w.get<double>());
            m.layers.push_back(std::move(layer));
        }

        if (m.layers.empty()) throw DataError("checkpoint has no layers");
        if (m.anomaly_weight.size() != m.hidden_dim)
            throw DataError("checkpoint anomaly weight size mismatch");
        for (const auto& layer : m.layers)
            for (double w : layer.weights)
                if (!std::isfinite(w)) throw DataError("checkpoint has a non-finite parameter");
        return m;
    } catch (const json::exception& ex) {
        throw DataError(std::string("malformed checkpoint: ") + ex.what());
    }
}

ScorerModel ScorerModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& ex) {
        throw DataError(path.string() + ": " + ex.what());
    }
    try {
        return from_json(doc);
    } catch (const DataError& ex) {
        throw DataError(path.string() + ": " + ex.what());
    }
}

} // namespace taseg::model
