#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "taseg/errors.hpp"
#include "taseg/model.hpp"

using namespace taseg;
namespace fs = std::filesystem;

namespace {

series::TemporalInstance make_instance(std::size_t d_vars, std::size_t length,
                                       std::uint64_t seed) {
    series::TemporalInstance inst;
    inst.id = "test";
    inst.d_vars = d_vars;
    inst.length = length;
    inst.values.resize(d_vars * length);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    for (auto& v : inst.values) v = dist(rng);
    return inst;
}

model::ScorerModel single_layer_model(std::vector<double> taps, std::size_t dilation) {
    model::ScorerModel m;
    m.input_dim = 1;
    m.hidden_dim = 1;
    m.filter_size = taps.size();
    model::ConvLayer layer;
    layer.in_channels = 1;
    layer.out_channels = 1;
    layer.taps = taps.size();
    layer.dilation = dilation;
    layer.weights = std::move(taps);
    layer.bias = {0.0};
    m.layers.push_back(std::move(layer));
    m.anomaly_weight = {1.0};
    return m;
}

} // namespace

TEST_CASE("receptive field is k^n") {
    std::mt19937_64 rng(1);
    const auto m7 = model::ScorerModel::init(1, 2, 2, 7, model::Pooling::max, rng);
    CHECK(m7.receptive_field() == 128);
    const auto m4 = model::ScorerModel::init(1, 2, 2, 4, model::Pooling::max, rng);
    CHECK(m4.receptive_field() == 16);
    // Dilation doubles per layer for k=2.
    for (std::size_t i = 0; i < 7; ++i) CHECK(m7.layers[i].dilation == (1u << i));
}

TEST_CASE("hand convolution with zero left-padding") {
    auto m = single_layer_model({1.0, 1.0}, 1);
    series::TemporalInstance inst;
    inst.id = "x";
    inst.d_vars = 1;
    inst.length = 4;
    inst.values = {1.0, 2.0, 3.0, 4.0};

    const auto res = model::forward(m, inst);
    CHECK(res.features.vectors == std::vector<double>{1.0, 3.0, 5.0, 7.0});

    auto m2 = single_layer_model({1.0, 1.0}, 2);
    const auto res2 = model::forward(m2, inst);
    CHECK(res2.features.vectors == std::vector<double>{1.0, 2.0, 4.0, 6.0});
}

TEST_CASE("zero pre-activation gives score 0.5") {
    auto m = single_layer_model({0.0, 0.0}, 1);
    series::TemporalInstance inst;
    inst.id = "x";
    inst.d_vars = 1;
    inst.length = 3;
    inst.values = {1.0, -2.0, 3.0};
    const auto res = model::forward(m, inst);
    for (double s : res.scores.local) CHECK(s == 0.5);
    CHECK(res.scores.global == 0.5);
}

TEST_CASE("scores stay strictly inside the clamp interval") {
    auto m = single_layer_model({100.0, 100.0}, 1);
    series::TemporalInstance inst;
    inst.id = "x";
    inst.d_vars = 1;
    inst.length = 2;
    inst.values = {100.0, 100.0};
    const auto res = model::forward(m, inst);
    for (double s : res.scores.local) {
        CHECK(s >= m.clamp_eps);
        CHECK(s <= 1.0 - m.clamp_eps);
    }
}

TEST_CASE("causality: changing a future input leaves h_t bit-identical") {
    std::mt19937_64 rng(5);
    const auto m = model::ScorerModel::init(2, 3, 2, 3, model::Pooling::max, rng);
    auto inst = make_instance(2, 40, 9);
    const auto base = model::forward(m, inst);

    const std::size_t t_check = 20;
    auto perturbed = inst;
    for (std::size_t v = 0; v < 2; ++v)
        for (std::size_t t = t_check + 1; t < inst.length; ++t)
            perturbed.at(v, t) += 3.7;
    const auto res = model::forward(m, perturbed);
    for (std::size_t dd = 0; dd < 3; ++dd)
        for (std::size_t t = 0; t <= t_check; ++t)
            CHECK(res.features.vectors[dd * 40 + t] == base.features.vectors[dd * 40 + t]);
}

TEST_CASE("receptive field edges: x_{t-k^n} is invisible, x_{t-k^n+1} is not") {
    // All-positive weights keep every path through the ReLUs active.
    model::ScorerModel m;
    m.input_dim = 1;
    m.hidden_dim = 1;
    m.filter_size = 2;
    std::size_t dilation = 1;
    for (int i = 0; i < 4; ++i) { // receptive field 16
        model::ConvLayer layer;
        layer.in_channels = 1;
        layer.out_channels = 1;
        layer.taps = 2;
        layer.dilation = dilation;
        layer.weights = {0.5, 0.5};
        layer.bias = {0.1};
        m.layers.push_back(std::move(layer));
        dilation *= 2;
    }
    m.anomaly_weight = {1.0};
    REQUIRE(m.receptive_field() == 16);

    series::TemporalInstance inst;
    inst.id = "x";
    inst.d_vars = 1;
    inst.length = 40;
    inst.values.assign(40, 1.0);
    const auto base = model::forward(m, inst);

    const std::size_t t_check = 30;
    {
        auto outside = inst;
        outside.at(0, t_check - 16) += 5.0;
        const auto res = model::forward(m, outside);
        CHECK(res.features.vectors[t_check] == base.features.vectors[t_check]);
    }
    {
        auto inside = inst;
        inside.at(0, t_check - 15) += 5.0;
        const auto res = model::forward(m, inside);
        CHECK(res.features.vectors[t_check] != base.features.vectors[t_check]);
    }
}

TEST_CASE("activation_raw is consistent with the local scores") {
    std::mt19937_64 rng(17);
    const auto m = model::ScorerModel::init(2, 4, 2, 2, model::Pooling::avg, rng);
    const auto inst = make_instance(2, 16, 3);
    const auto res = model::forward(m, inst);
    const auto& raw = model::activation_raw(m, res.tape);
    REQUIRE(raw.size() == 16);
    for (std::size_t t = 0; t < raw.size(); ++t)
        CHECK(1.0 / (1.0 + std::exp(-raw[t])) == doctest::Approx(res.scores.local[t]));

    // w = 0 gives an all-zero activation map.
    auto zero_w = m;
    std::fill(zero_w.anomaly_weight.begin(), zero_w.anomaly_weight.end(), 0.0);
    const auto res0 = model::forward(zero_w, inst);
    for (double v : model::activation_raw(zero_w, res0.tape)) CHECK(v == 0.0);
}

TEST_CASE("zero upstream gradients give exactly zero parameter gradients") {
    std::mt19937_64 rng(23);
    const auto m = model::ScorerModel::init(2, 3, 2, 2, model::Pooling::max, rng);
    const auto inst = make_instance(2, 12, 4);
    const auto res = model::forward(m, inst);
    const std::vector<double> zeros(12, 0.0);
    const auto grads = model::backward(m, res.tape, zeros, 0.0);
    CHECK(grads.max_abs() == 0.0);
}

TEST_CASE("backward matches finite differences on every parameter") {
    std::mt19937_64 rng(91);
    auto m = model::ScorerModel::init(2, 3, 2, 2, model::Pooling::max, rng);
    const auto inst = make_instance(2, 16, 10);

    // Fixed upstream gradients make the scalar objective
    // sum_t u_t s_t + u_g s_* differentiable through the whole stack.
    std::vector<double> u(16);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& v : u) v = dist(rng);
    const double u_g = 0.7;

    auto objective = [&]() {
        const auto res = model::forward(m, inst);
        double total = res.scores.global * u_g;
        for (std::size_t t = 0; t < u.size(); ++t) total += res.scores.local[t] * u[t];
        return total;
    };

    const auto res = model::forward(m, inst);
    const auto grads = model::backward(m, res.tape, u, u_g);

    auto check_tensor = [&](double* params, const double* analytic, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            const double fd = oracles::central_diff(params[i], objective, 1e-5);
            CHECK(oracles::rel_err(analytic[i], fd, 1e-5) < 1e-4);
        }
    };
    for (std::size_t i = 0; i < m.n_layers(); ++i) {
        check_tensor(m.layers[i].weights.data(), grads.layer_weights[i].data(),
                     m.layers[i].weights.size());
        check_tensor(m.layers[i].bias.data(), grads.layer_bias[i].data(),
                     m.layers[i].bias.size());
    }
    check_tensor(m.anomaly_weight.data(), grads.anomaly_weight.data(),
                 m.anomaly_weight.size());
}

TEST_CASE("max pooling routes the global gradient to the argmax column only") {
    std::mt19937_64 rng(37);
    const auto m = model::ScorerModel::init(1, 2, 2, 1, model::Pooling::max, rng);
    const auto inst = make_instance(1, 8, 2);
    const auto res = model::forward(m, inst);

    const std::vector<double> zeros(8, 0.0);
    const auto grads = model::backward(m, res.tape, zeros, 1.0);

    // Same instance with a non-argmax column of h nudged: the pooled path
    // contribution is unchanged, so gradients w.r.t. w stay equal.
    for (std::size_t dd = 0; dd < 2; ++dd)
        CHECK(grads.anomaly_weight[dd] ==
              doctest::Approx(res.tape.pooled[dd] * res.scores.global *
                              (1.0 - res.scores.global)));
}

TEST_CASE("avg pooling distributes the global gradient across columns") {
    std::mt19937_64 rng(53);
    auto m = model::ScorerModel::init(1, 2, 2, 1, model::Pooling::avg, rng);
    const auto inst = make_instance(1, 8, 2);
    const auto res = model::forward(m, inst);
    const std::vector<double> zeros(8, 0.0);
    const auto grads = model::backward(m, res.tape, zeros, 1.0);

    auto objective = [&]() { return model::forward(m, inst).scores.global; };
    for (std::size_t i = 0; i < m.layers[0].weights.size(); ++i) {
        const double fd = oracles::central_diff(m.layers[0].weights[i], objective, 1e-5);
        CHECK(oracles::rel_err(grads.layer_weights[0][i], fd, 1e-5) < 1e-4);
    }
}

TEST_CASE("tape/model mismatch is rejected") {
    std::mt19937_64 rng(3);
    const auto m1 = model::ScorerModel::init(1, 2, 2, 1, model::Pooling::max, rng);
    const auto m2 = model::ScorerModel::init(1, 2, 2, 1, model::Pooling::max, rng);
    const auto inst = make_instance(1, 6, 8);
    const auto res = model::forward(m1, inst);
    const std::vector<double> zeros(6, 0.0);
    CHECK_THROWS_AS(model::backward(m2, res.tape, zeros, 0.0), ConfigError);
    CHECK_THROWS_AS(model::activation_raw(m2, res.tape), ConfigError);
}

TEST_CASE("dimension mismatch between model and instance is rejected") {
    std::mt19937_64 rng(3);
    const auto m = model::ScorerModel::init(3, 2, 2, 1, model::Pooling::max, rng);
    const auto inst = make_instance(2, 6, 8);
    CHECK_THROWS_WITH_AS(model::forward(m, inst), doctest::Contains("variables"), DataError);
}

TEST_CASE("checkpoint JSON round-trips parameters losslessly") {
    std::mt19937_64 rng(1234);
    const auto m = model::ScorerModel::init(3, 4, 2, 3, model::Pooling::avg, rng);
    const fs::path path =
        fs::temp_directory_path() / ("taseg_ckpt_" + std::to_string(rng()) + ".json");
    m.save(path);
    const auto loaded = model::ScorerModel::load(path);
    fs::remove(path);

    CHECK(loaded.input_dim == m.input_dim);
    CHECK(loaded.hidden_dim == m.hidden_dim);
    CHECK(loaded.filter_size == m.filter_size);
    CHECK(loaded.pooling == m.pooling);
    CHECK(loaded.clamp_eps == m.clamp_eps);
    CHECK(loaded.anomaly_weight == m.anomaly_weight);
    REQUIRE(loaded.n_layers() == m.n_layers());
    for (std::size_t i = 0; i < m.n_layers(); ++i) {
        CHECK(loaded.layers[i].weights == m.layers[i].weights); // bit-exact
        CHECK(loaded.layers[i].bias == m.layers[i].bias);
        CHECK(loaded.layers[i].dilation == m.layers[i].dilation);
    }
}
