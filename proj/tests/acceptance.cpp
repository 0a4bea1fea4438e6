// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit status is nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "taseg/cli.hpp"
#include "taseg/dtw.hpp"
#include "taseg/eval.hpp"
#include "taseg/inference.hpp"
#include "taseg/model.hpp"
#include "taseg/pseudolabel.hpp"
#include "taseg/series.hpp"
#include "taseg/training.hpp"

using namespace taseg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool passed, const std::string& detail = "") {
    std::printf("[%s] criterion %2d: %s%s%s\n", passed ? "PASS" : "FAIL", number, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!passed) ++g_failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// 1. Hard DTW equals exhaustive enumeration, exactly, on 200 random matrices.
void criterion_1() {
    const auto start = Clock::now();
    bool ok = true;
    std::mt19937_64 rng(1001);
    for (int trial = 0; trial < 200 && ok; ++trial) {
        const std::size_t L = 1 + rng() % 6;
        const std::size_t T = L + rng() % (13 - L);
        const auto costs = oracles::random_costs(L, T, rng);
        const double oracle = oracles::enumerate_min_cost(costs);
        ok = ok && dtw::sdtw_forward(costs, 0.0).first == oracle;
        ok = ok && dtw::path_cost(costs, dtw::decode_path(costs)) == oracle;
    }
    const double elapsed = seconds_since(start);
    ok = ok && elapsed < 10.0;
    report(1, "DTW oracle equivalence (200 matrices, exact)", ok,
           "elapsed " + std::to_string(elapsed) + " s");
}

// 2. Soft-DTW gradient vs central finite differences; column sums of E.
void criterion_2() {
    bool ok = true;
    double worst = 0.0, worst_col = 0.0;
    std::mt19937_64 rng(1002);
    for (double gamma : {0.1, 1.0}) {
        for (int trial = 0; trial < 25; ++trial) {
            auto costs = oracles::random_costs(4, 8, rng);
            auto [value, ws] = dtw::sdtw_forward(costs, gamma);
            (void)value;
            const auto grad = dtw::sdtw_backward(costs, ws);
            for (std::size_t l = 0; l < 4; ++l)
                for (std::size_t t = 0; t < 8; ++t) {
                    const double fd = oracles::central_diff(
                        costs.at(l, t),
                        [&] { return dtw::sdtw_forward(costs, gamma).first; }, 1e-6);
                    worst = std::max(worst, oracles::rel_err(grad.at(l, t), fd, 1e-3));
                }
            for (std::size_t t = 0; t < 8; ++t) {
                double col = 0.0;
                for (std::size_t l = 0; l < 4; ++l) col += grad.at(l, t);
                worst_col = std::max(worst_col, std::abs(col - 1.0));
            }
        }
    }
    ok = worst < 1e-4 && worst_col < 1e-10;
    report(2, "soft-DTW gradient vs finite differences; column-stochastic E", ok,
           "max rel err " + std::to_string(worst) + ", max |col-1| " + std::to_string(worst_col));
}

// 3. Soft value lower-bounds the hard minimum and converges as gamma -> 0.
void criterion_3() {
    bool ok = true;
    double worst_gap = 0.0;
    std::mt19937_64 rng(1003);
    for (int trial = 0; trial < 20; ++trial) {
        const auto costs = oracles::random_costs(3, 9, rng);
        const double hard = dtw::sdtw_forward(costs, 0.0).first;
        for (double gamma : {1e-4, 1e-2, 1.0})
            ok = ok && dtw::sdtw_forward(costs, gamma).first <= hard;
        worst_gap = std::max(worst_gap, std::abs(dtw::sdtw_forward(costs, 1e-4).first - hard));
    }
    ok = ok && worst_gap < 1e-3;
    report(3, "soft-to-hard limit on 3x9 matrices", ok,
           "max |soft(1e-4) - hard| = " + std::to_string(worst_gap));
}

// 4. Model gradients vs finite differences through L_c and the full loss.
void criterion_4() {
    std::mt19937_64 rng(1004);
    auto m = model::ScorerModel::init(2, 4, 2, 2, model::Pooling::max, rng);

    series::TemporalInstance inst;
    inst.id = "fd";
    inst.d_vars = 2;
    inst.length = 16;
    inst.values.resize(32);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    for (auto& v : inst.values) v = dist(rng);

    training::TrainConfig tc;
    tc.label_length = 4;
    tc.tau = 0.5;
    tc.beta = 5.0; // keeps the hinge active for the full-loss check
    tc.gamma = 0.5;
    const int y = 1;

    double worst = 0.0;
    // Classification loss only.
    {
        auto objective = [&]() {
            const auto fwd = model::forward(m, inst);
            return training::classification_loss(fwd.scores.global, y);
        };
        const auto fwd = model::forward(m, inst);
        const double sg = fwd.scores.global;
        const double grad_global = (sg - y) / (sg * (1.0 - sg));
        const std::vector<double> zeros(inst.length, 0.0);
        const auto grads = model::backward(m, fwd.tape, zeros, grad_global);

        auto probe = [&](double* params, const double* analytic, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                const double fd = oracles::central_diff(params[i], objective, 1e-5);
                worst = std::max(worst, oracles::rel_err(analytic[i], fd, 1e-5));
            }
        };
        for (std::size_t i = 0; i < m.n_layers(); ++i) {
            probe(m.layers[i].weights.data(), grads.layer_weights[i].data(),
                  m.layers[i].weights.size());
            probe(m.layers[i].bias.data(), grads.layer_bias[i].data(), m.layers[i].bias.size());
        }
        probe(m.anomaly_weight.data(), grads.anomaly_weight.data(), m.anomaly_weight.size());
    }
    // Full loss with an active hinge.
    {
        const auto step = training::instance_loss(m, inst, y, tc);
        const bool hinge_active = step.loss.alignment > 0.0;
        auto objective = [&]() { return training::instance_loss(m, inst, y, tc).loss.total; };
        auto probe = [&](double* params, const double* analytic, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                const double fd = oracles::central_diff(params[i], objective, 1e-5);
                worst = std::max(worst, oracles::rel_err(analytic[i], fd, 1e-5));
            }
        };
        for (std::size_t i = 0; i < m.n_layers(); ++i) {
            probe(m.layers[i].weights.data(), step.grads.layer_weights[i].data(),
                  m.layers[i].weights.size());
            probe(m.layers[i].bias.data(), step.grads.layer_bias[i].data(),
                  m.layers[i].bias.size());
        }
        probe(m.anomaly_weight.data(), step.grads.anomaly_weight.data(),
              m.anomaly_weight.size());
        if (!hinge_active) worst = 1.0;
    }
    report(4, "DiCNN gradients vs finite differences (L_c and full loss)", worst < 1e-3,
           "max rel err " + std::to_string(worst));
}

// 5. Causality and receptive-field exactness.
void criterion_5() {
    bool ok = true;
    std::mt19937_64 rng(1005);

    // Random models/instances: future perturbations never change h_t.
    for (int trial = 0; trial < 5 && ok; ++trial) {
        const auto m =
            model::ScorerModel::init(2, 3, 2, 3, model::Pooling::max, rng);
        series::TemporalInstance inst;
        inst.id = "c";
        inst.d_vars = 2;
        inst.length = 60;
        inst.values.resize(120);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (auto& v : inst.values) v = dist(rng);
        const auto base = model::forward(m, inst);

        const std::size_t t_check = 25;
        auto perturbed = inst;
        for (std::size_t v = 0; v < 2; ++v)
            for (std::size_t t = t_check + 1; t < inst.length; ++t)
                perturbed.at(v, t) = dist(rng) * 10.0;
        const auto res = model::forward(m, perturbed);
        for (std::size_t dd = 0; dd < 3 && ok; ++dd)
            for (std::size_t t = 0; t <= t_check && ok; ++t)
                ok = res.features.vectors[dd * 60 + t] == base.features.vectors[dd * 60 + t];
    }

    // k=2, n=7: receptive field exactly 128.
    {
        std::mt19937_64 r2(42);
        const auto m7 = model::ScorerModel::init(1, 2, 2, 7, model::Pooling::max, r2);
        ok = ok && m7.receptive_field() == 128;

        model::ScorerModel probe;
        probe.input_dim = 1;
        probe.hidden_dim = 1;
        probe.filter_size = 2;
        std::size_t dilation = 1;
        for (int i = 0; i < 7; ++i) {
            model::ConvLayer layer;
            layer.in_channels = 1;
            layer.out_channels = 1;
            layer.taps = 2;
            layer.dilation = dilation;
            layer.weights = {0.5, 0.5};
            layer.bias = {0.01};
            probe.layers.push_back(std::move(layer));
            dilation *= 2;
        }
        probe.anomaly_weight = {1.0};

        series::TemporalInstance inst;
        inst.id = "rf";
        inst.d_vars = 1;
        inst.length = 260;
        inst.values.assign(260, 1.0);
        const auto base = model::forward(probe, inst);
        const std::size_t t_check = 200;

        auto outside = inst;
        outside.at(0, t_check - 128) += 7.0;
        const auto res_out = model::forward(probe, outside);
        ok = ok && res_out.features.vectors[t_check] == base.features.vectors[t_check];

        auto inside = inst;
        inside.at(0, t_check - 127) += 7.0;
        const auto res_in = model::forward(probe, inside);
        ok = ok && res_in.features.vectors[t_check] != base.features.vectors[t_check];
    }
    report(5, "causality and receptive field 2^7 = 128", ok);
}

// 6. Pseudo-label unit suite, exact.
void criterion_6() {
    bool ok = true;

    const std::vector<double> raw = {2.0, 4.0, 6.0};
    ok = ok && pseudolabel::normalize_activation(raw).values ==
                   std::vector<double>{0.0, 0.5, 1.0};
    const std::vector<double> flat = {5.0, 5.0, 5.0};
    ok = ok && pseudolabel::normalize_activation(flat).values ==
                   std::vector<double>{0.0, 0.0, 0.0};

    pseudolabel::ActivationMap map;
    map.values = {0.0, 0.2, 0.9, 1.0, 0.1, 0.0};
    ok = ok && pseudolabel::phi(map, 3, 0.5).bits == std::vector<std::uint8_t>{0, 1, 0};

    // T=5, L=3 partitions as 2/2/1.
    pseudolabel::ActivationMap five;
    five.values = {0.0, 0.0, 0.0, 0.0, 0.9};
    ok = ok && pseudolabel::phi(five, 3, 0.5).bits == std::vector<std::uint8_t>{0, 0, 1};
    five.values = {0.0, 0.0, 0.0, 0.9, 0.0};
    ok = ok && pseudolabel::phi(five, 3, 0.5).bits == std::vector<std::uint8_t>{0, 1, 0};

    // tau monotonicity.
    std::mt19937_64 rng(1006);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 100 && ok; ++trial) {
        pseudolabel::ActivationMap random_map;
        random_map.values.resize(20);
        for (auto& v : random_map.values) v = dist(rng);
        const auto lo = pseudolabel::phi(random_map, 5, 0.3);
        const auto hi = pseudolabel::phi(random_map, 5, 0.7);
        for (std::size_t l = 0; l < 5; ++l) ok = ok && hi.bits[l] <= lo.bits[l];
    }

    // Masking identities.
    pseudolabel::SequentialLabel bits;
    bits.bits = {0, 1, 0};
    auto [pos1, neg1] = pseudolabel::masked_labels(bits, 1);
    auto [pos0, neg0] = pseudolabel::masked_labels(bits, 0);
    ok = ok && pos1.bits == bits.bits && neg1.all_zero();
    ok = ok && pos0.all_zero() && neg0.bits == bits.bits;

    report(6, "pseudo-label unit suite (normalization, partition, masking)", ok);
}

// 7. Metric hand values and an exhaustive sweep oracle.
void criterion_7() {
    bool ok = true;

    const std::vector<std::uint8_t> pred = {1, 1, 0, 0};
    const std::vector<std::uint8_t> truth = {1, 0, 1, 0};
    const auto r = eval::point_metrics(pred, truth);
    ok = ok && r.tp == 1 && r.fp == 1 && r.fn == 1 && r.precision == 0.5 && r.recall == 0.5 &&
         r.f1 == 0.5 && r.iou == 1.0 / 3.0;

    const std::vector<double> scores = {0.1, 0.9, 0.8, 0.2};
    const std::vector<std::uint8_t> sep_truth = {0, 1, 1, 0};
    const auto [best, threshold] = eval::best_threshold_metrics(scores, sep_truth);
    ok = ok && best.f1 == 1.0 && best.iou == 1.0;
    ok = ok && eval::auroc(scores, sep_truth) == 1.0;
    const std::vector<double> constant(4, 0.5);
    ok = ok && eval::auroc(constant, sep_truth) == 0.5;
    const std::vector<double> reversed = {0.9, 0.1, 0.2, 0.8};
    ok = ok && eval::auroc(reversed, sep_truth) == 0.0;

    std::mt19937_64 rng(1007);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 50 && ok; ++trial) {
        std::vector<double> s(50);
        std::vector<std::uint8_t> g(50);
        for (auto& v : s) v = dist(rng);
        for (auto& v : g) v = rng() % 2;
        const auto [swept, tau] = eval::best_threshold_metrics(s, g);
        (void)tau;
        // Exhaustive check over all distinct-threshold predictions.
        double oracle = 0.0;
        std::vector<double> sorted = s;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<double> candidates = {sorted.front() - 1.0, sorted.back() + 1.0};
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
            candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
        for (double cut : candidates) {
            std::vector<std::uint8_t> p(50);
            for (std::size_t i = 0; i < 50; ++i) p[i] = s[i] >= cut ? 1 : 0;
            oracle = std::max(oracle, eval::point_metrics(p, g).f1);
        }
        ok = ok && swept.f1 == oracle;
    }
    report(7, "metrics match hand values and the exhaustive sweep oracle", ok);
}

// 8. End-to-end synthetic experiment over 5 seeds.
void criterion_8() {
    const auto start = Clock::now();
    int passing_seeds = 0;
    std::string detail;

    const fs::path root =
        fs::temp_directory_path() / ("taseg_accept_" + std::to_string(std::random_device{}()));
    for (std::uint64_t seed : {7ull, 8ull, 9ull, 10ull, 11ull}) {
        const fs::path run = root / ("seed_" + std::to_string(seed));
        cli::RunConfig config; // library defaults: 100 instances, D=3, T=500, ~5% points
        config.set("seed", std::to_string(seed));

        double point_f1 = 0.0, instance_f1 = 0.0;
        try {
            if (cli::cmd_gen(config, run / "data") != 0) throw std::runtime_error("gen failed");
            if (cli::cmd_train(config, run / "data", run / "model.json", false) != 0)
                throw std::runtime_error("train failed");
            if (cli::cmd_segment(config, run / "model.json", run / "data" / "test",
                                 run / "pred", false) != 0)
                throw std::runtime_error("segment failed");

            // Recompute the metrics directly from the emitted files.
            const auto test = series::load_dataset(run / "data" / "test");
            std::vector<std::uint8_t> point_pred, point_truth, inst_pred, inst_truth;
            for (const auto& e : test.entries) {
                std::ifstream in(run / "pred" / (e.instance.id + ".pred.csv"));
                std::string line;
                std::getline(in, line);
                std::uint8_t any = 0;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    const auto comma = line.find(',');
                    const auto bit = static_cast<std::uint8_t>(
                        std::stoi(line.substr(comma + 1)));
                    point_pred.push_back(bit);
                    any |= bit;
                }
                point_truth.insert(point_truth.end(), e.point_labels->begin(),
                                   e.point_labels->end());
                inst_pred.push_back(any);
                inst_truth.push_back(static_cast<std::uint8_t>(e.label));
            }
            point_f1 = eval::point_metrics(point_pred, point_truth).f1;
            instance_f1 = eval::point_metrics(inst_pred, inst_truth).f1;
        } catch (const std::exception& ex) {
            detail += "seed " + std::to_string(seed) + ": " + ex.what() + "; ";
            continue;
        }
        detail += "seed " + std::to_string(seed) + ": point F1 " +
                  std::to_string(point_f1).substr(0, 5) + ", inst F1 " +
                  std::to_string(instance_f1).substr(0, 5) + "; ";
        if (point_f1 >= 0.70 && instance_f1 >= 0.90) ++passing_seeds;
    }
    fs::remove_all(root);

    const double elapsed = seconds_since(start);
    const bool ok = passing_seeds >= 4 && elapsed < 900.0;
    report(8, "end-to-end synthetic experiment (4 of 5 seeds)", ok,
           detail + "elapsed " + std::to_string(elapsed) + " s");
}

// 9. Segmentation smoothness: anomalous runs are contiguous and bounded.
void criterion_9() {
    bool ok = true;
    series::SynthConfig synth;
    synth.instances = 40;
    synth.length = 200;
    synth.d_vars = 2;
    synth.segment_min = 10;
    synth.segment_max = 40;
    synth.anomalous_instances = 15;
    const auto dataset = series::generate_synthetic(synth, 1009);

    std::mt19937_64 rng(1009);
    const auto m = model::ScorerModel::init(2, 4, 2, 5, model::Pooling::max, rng);

    inference::SegmentationParams params;
    params.label_length = 8;
    params.tau = 0.5;
    params.tau_star = 0.0; // force decoding on every instance

    for (const auto& entry : dataset.entries) {
        const auto res = inference::segment_instance(m, entry.instance, params);
        ok = ok && res.segmentation.tiles(entry.instance.length);

        // Re-derive the pseudo-label the decoder used to bound the runs.
        const auto fwd = model::forward(m, entry.instance);
        const auto map = pseudolabel::normalize_activation(model::activation_raw(m, fwd.tape));
        const auto bits = pseudolabel::phi(map, params.label_length, params.tau);
        std::size_t one_bits = 0;
        for (auto b : bits.bits) one_bits += b;

        std::size_t runs = 0;
        for (std::size_t t = 0; t < res.point_predictions.size(); ++t)
            if (res.point_predictions[t] != 0 &&
                (t == 0 || res.point_predictions[t - 1] == 0))
                ++runs;
        ok = ok && runs <= one_bits;

        // Contiguity: within the emitted segmentation, every anomalous
        // segment is a maximal run (no two adjacent anomalous segments).
        const auto& segs = res.segmentation.segments;
        for (std::size_t i = 1; i < segs.size(); ++i)
            ok = ok && segs[i].label != segs[i - 1].label;
        if (!ok) break;
    }
    report(9, "segmentation smoothness (runs bounded by pseudo-label 1-bits)", ok);
}

// 10. O(LT) smoke check: doubling T roughly doubles the forward time.
void criterion_10() {
    std::mt19937_64 rng(1010);
    const auto costs_small = oracles::random_costs(8, 2048, rng);
    const auto costs_large = oracles::random_costs(8, 4096, rng);

    auto time_forward = [](const dtw::CostMatrix& costs) {
        double best = 1e100;
        for (int rep = 0; rep < 9; ++rep) {
            const auto start = Clock::now();
            volatile double sink = dtw::sdtw_forward(costs, 0.1).first;
            (void)sink;
            best = std::min(best, seconds_since(start));
        }
        return best;
    };

    time_forward(costs_small); // warm-up
    const double t_small = time_forward(costs_small);
    const double t_large = time_forward(costs_large);
    const double ratio = t_large / t_small;
    report(10, "O(LT) scaling: T 2048 -> 4096 ratio <= 2.5", ratio <= 2.5,
           "ratio " + std::to_string(ratio));
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();

    if (g_failures == 0)
        std::printf("all 10 acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
