#include "taseg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "taseg/dtw.hpp"
#include "taseg/errors.hpp"
#include "taseg/eval.hpp"
#include "taseg/inference.hpp"
#include "taseg/kernels.hpp"
#include "taseg/model.hpp"
#include "taseg/pseudolabel.hpp"
#include "taseg/series.hpp"
#include "taseg/training.hpp"

namespace taseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json default_config() {
    return json{
        {"seed", 7},
        {"synth.instances", 100},
        {"synth.d_vars", 3},
        {"synth.length", 500},
        {"synth.anomaly_ratio", 0.05},
        {"synth.anomalous_instances", -1},
        {"synth.segment_min", 20},
        {"synth.segment_max", 60},
        {"synth.noise_std", 0.05},
        {"split.train", 5},
        {"split.valid", 2},
        {"split.test", 3},
        {"model.hidden_dim", 32},
        {"model.filter_size", 2},
        {"model.layers", 7},
        {"model.pooling", "max"},
        {"model.clamp_eps", 1e-7},
        {"train.label_length", 8},
        {"train.tau", 0.5},
        {"train.beta", 0.5},
        {"train.gamma", 0.1},
        {"train.learning_rate", 1e-3},
        {"train.batch_size", 16},
        {"train.max_epochs", 50},
        {"train.patience", 20},
        {"grid.label_length", json::array({4, 8, 12, 16})},
        {"grid.tau", json::array({0.1, 0.3, 0.5, 0.7})},
        {"grid.beta", json::array({0.1, 0.5, 1.0, 2.0})},
        {"grid.max_epochs", 15},
    };
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

fs::path sibling_file(const fs::path& model_path, const std::string& suffix) {
    fs::path p = model_path;
    p.replace_extension();
    return p.concat(suffix);
}

} // namespace

RunConfig::RunConfig() : values_(default_config()) {}

void RunConfig::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& ex) {
        throw ConfigError(path.string() + ": " + ex.what());
    }
    if (!doc.is_object()) throw ConfigError(path.string() + ": config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!values_.contains(key)) throw ConfigError("unknown config key '" + key + "'");
        values_[key] = value;
    }
}

void RunConfig::set(const std::string& key, const std::string& raw_value) {
    if (!values_.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    json parsed;
    try {
        parsed = json::parse(raw_value);
    } catch (const json::exception&) {
        parsed = raw_value; // plain string (e.g. pooling mode)
    }
    // Comma lists for array-valued keys: --grid.tau 0.3,0.5
    if (values_[key].is_array() && !parsed.is_array()) {
        json arr = json::array();
        std::string item;
        std::istringstream in(raw_value);
        while (std::getline(in, item, ',')) {
            try {
                arr.push_back(json::parse(item));
            } catch (const json::exception&) {
                throw ConfigError("cannot parse list value for '" + key + "': " + raw_value);
            }
        }
        parsed = std::move(arr);
    }
    values_[key] = std::move(parsed);
}

void RunConfig::apply_overrides(const std::vector<std::string>& extra_args) {
    std::size_t i = 0;
    while (i < extra_args.size()) {
        std::string arg = extra_args[i];
        if (arg.rfind("--", 0) != 0)
            throw ConfigError("unexpected argument '" + arg + "' (expected --key value)");
        arg = arg.substr(2);
        const auto eq = arg.find('=');
        if (eq != std::string::npos) {
            set(arg.substr(0, eq), arg.substr(eq + 1));
            ++i;
        } else {
            if (i + 1 >= extra_args.size())
                throw ConfigError("missing value for override --" + arg);
            set(arg, extra_args[i + 1]);
            i += 2;
        }
    }
}

double RunConfig::get_double(const std::string& key) const {
    const auto& v = values_.at(key);
    if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
    return v.get<double>();
}

std::size_t RunConfig::get_size(const std::string& key) const {
    const auto& v = values_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("config key '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

long RunConfig::get_long(const std::string& key) const {
    const auto& v = values_.at(key);
    if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
    return v.get<long>();
}

std::string RunConfig::get_string(const std::string& key) const {
    const auto& v = values_.at(key);
    if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
    const auto& v = values_.at(key);
    if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& item : v) {
        if (!item.is_number()) throw ConfigError("config key '" + key + "' must hold numbers");
        out.push_back(item.get<double>());
    }
    return out;
}

std::vector<std::size_t> RunConfig::get_sizes(const std::string& key) const {
    const auto& v = values_.at(key);
    if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array");
    std::vector<std::size_t> out;
    for (const auto& item : v) {
        if (!item.is_number_integer() || item.get<long long>() <= 0)
            throw ConfigError("config key '" + key + "' must hold positive integers");
        out.push_back(item.get<std::size_t>());
    }
    return out;
}

namespace {

series::SynthConfig synth_config_from(const RunConfig& config) {
    series::SynthConfig synth;
    synth.instances = config.get_size("synth.instances");
    synth.d_vars = config.get_size("synth.d_vars");
    synth.length = config.get_size("synth.length");
    synth.anomaly_ratio = config.get_double("synth.anomaly_ratio");
    synth.anomalous_instances = static_cast<int>(config.get_long("synth.anomalous_instances"));
    synth.segment_min = config.get_size("synth.segment_min");
    synth.segment_max = config.get_size("synth.segment_max");
    synth.noise_std = config.get_double("synth.noise_std");
    synth.validate();
    return synth;
}

training::TrainConfig train_config_from(const RunConfig& config) {
    training::TrainConfig tc;
    tc.label_length = config.get_size("train.label_length");
    tc.tau = config.get_double("train.tau");
    tc.beta = config.get_double("train.beta");
    tc.gamma = config.get_double("train.gamma");
    tc.learning_rate = config.get_double("train.learning_rate");
    tc.batch_size = config.get_size("train.batch_size");
    tc.max_epochs = config.get_size("train.max_epochs");
    tc.patience = config.get_size("train.patience");
    tc.seed = static_cast<std::uint64_t>(config.get_long("seed"));
    tc.validate();
    return tc;
}

struct ModelArch {
    std::size_t hidden_dim, filter_size, layers;
    model::Pooling pooling;
    double clamp_eps;
};

ModelArch model_arch_from(const RunConfig& config) {
    ModelArch arch{};
    arch.hidden_dim = config.get_size("model.hidden_dim");
    arch.filter_size = config.get_size("model.filter_size");
    arch.layers = config.get_size("model.layers");
    arch.pooling = model::pooling_from_name(config.get_string("model.pooling"));
    arch.clamp_eps = config.get_double("model.clamp_eps");
    if (arch.hidden_dim < 1 || arch.filter_size < 1 || arch.layers < 1)
        throw ConfigError("model architecture fields must be >= 1");
    if (!(arch.clamp_eps > 0.0 && arch.clamp_eps < 0.5))
        throw ConfigError("model.clamp_eps must lie in (0, 0.5)");
    return arch;
}

void write_training_log(const fs::path& path, const std::vector<training::EpochStats>& history,
                        bool append) {
    std::ofstream out(path, append ? std::ios::app : std::ios::out);
    if (!out) throw DataError("cannot write training log " + path.string());
    if (!append) out << "epoch,loss_c,loss_a,loss,val_f1,tau_star\n";
    for (const auto& row : history)
        out << row.epoch << ',' << format_double(row.loss_c) << ',' << format_double(row.loss_a)
            << ',' << format_double(row.loss) << ',' << format_double(row.val_f1) << ','
            << format_double(row.tau_star) << '\n';
}

void write_tau_sidecar(const fs::path& path, const training::SelectedThreshold& sel,
                       const training::TrainConfig& tc, const series::Normalization& stats) {
    json doc;
    doc["schema"] = "taseg-threshold-v1";
    doc["tau_star"] = sel.tau_star;
    doc["validation_f1"] = sel.validation_f1;
    doc["single_class_warning"] = sel.single_class_warning;
    doc["label_length"] = tc.label_length;
    doc["tau"] = tc.tau;
    doc["normalization"]["mean"] = stats.mean;
    doc["normalization"]["stddev"] = stats.stddev;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write threshold sidecar " + path.string());
    out << doc.dump(2) << '\n';
}

} // namespace

int cmd_gen(const RunConfig& config, const fs::path& out_dir) {
    const auto synth = synth_config_from(config);
    const std::array<std::size_t, 3> ratio = {config.get_size("split.train"),
                                              config.get_size("split.valid"),
                                              config.get_size("split.test")};
    if (ratio[0] + ratio[1] + ratio[2] == 0)
        throw ConfigError("split ratio parts must not all be zero");
    const auto seed = static_cast<std::uint64_t>(config.get_long("seed"));

    auto dataset = series::generate_synthetic(synth, seed);
    auto splits = series::split_dataset(dataset, ratio, seed);
    const auto stats = series::compute_normalization(splits[0]);
    for (auto& split : splits) split.normalization = stats;

    fs::create_directories(out_dir);
    series::save_dataset(splits[0], out_dir / "train");
    series::save_dataset(splits[1], out_dir / "valid");
    series::save_dataset(splits[2], out_dir / "test");

    std::size_t anomalous = 0, points = 0, anom_points = 0;
    for (const auto& e : dataset.entries) {
        anomalous += e.label;
        points += e.instance.length;
        if (e.point_labels)
            for (auto b : *e.point_labels) anom_points += b;
    }
    std::cout << "generated " << dataset.size() << " instances (" << anomalous
              << " anomalous, point ratio "
              << double(anom_points) / double(std::max<std::size_t>(points, 1)) << ") into "
              << out_dir.string() << " [" << splits[0].size() << "/" << splits[1].size() << "/"
              << splits[2].size() << "]\n";
    return 0;
}

int cmd_train(const RunConfig& config, const fs::path& data_dir, const fs::path& out_model,
              bool resume) {
    const auto tc = train_config_from(config);
    const auto arch = model_arch_from(config);

    const auto train_set = series::load_dataset(data_dir / "train");
    const auto valid_set = series::load_dataset(data_dir / "valid");

    const fs::path state_path = sibling_file(out_model, ".state.json");
    const fs::path tau_path = sibling_file(out_model, ".tau.json");
    const fs::path log_path = sibling_file(out_model, ".log.csv");

    training::TrainState resume_state;
    const training::TrainState* resume_ptr = nullptr;
    if (resume) {
        resume_state = training::TrainState::load(state_path);
        resume_ptr = &resume_state;
        std::cout << "resuming from epoch " << resume_state.epochs_done << "\n";
    }

    model::ScorerModel initial;
    if (!resume) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(config.get_long("seed")));
        initial = model::ScorerModel::init(train_set.d_vars(), arch.hidden_dim,
                                           arch.filter_size, arch.layers, arch.pooling, rng);
        initial.clamp_eps = arch.clamp_eps;
    }

    std::cout << "training on " << train_set.size() << " instances (backend "
              << kernels::backend_name(kernels::active_backend()) << ")\n";
    auto result = training::train(std::move(initial), train_set, valid_set, tc, resume_ptr);

    const series::Normalization stats = train_set.normalization
                                            ? *train_set.normalization
                                            : series::compute_normalization(train_set);
    result.best_model.save(out_model);
    write_tau_sidecar(tau_path, result.threshold, tc, stats);
    write_training_log(log_path, result.history, resume);
    result.state.save(state_path);

    std::cout << "best validation F1 " << result.threshold.validation_f1 << " at tau* "
              << result.threshold.tau_star << " (" << result.state.epochs_done
              << " epochs)\n";
    if (result.threshold.single_class_warning)
        std::cerr << "warning: validation split is single-class; tau* predicts all-normal\n";
    return 0;
}

int cmd_segment(const RunConfig& config, const fs::path& model_path, const fs::path& data_dir,
                const fs::path& out_dir, bool dump_dtw) {
    const auto m = model::ScorerModel::load(model_path);
    const fs::path tau_path = sibling_file(model_path, ".tau.json");
    if (!fs::exists(tau_path))
        throw DataError("missing threshold sidecar " + tau_path.string() +
                        " (run `taseg train` first)");
    std::ifstream tau_in(tau_path);
    json tau_doc;
    try {
        tau_in >> tau_doc;
    } catch (const json::exception& ex) {
        throw DataError(tau_path.string() + ": " + ex.what());
    }

    inference::SegmentationParams params;
    params.tau_star = tau_doc.at("tau_star").get<double>();
    params.label_length = tau_doc.value("label_length", config.get_size("train.label_length"));
    params.tau = tau_doc.value("tau", config.get_double("train.tau"));

    auto dataset = series::load_dataset(data_dir);
    if (!dataset.entries.empty() && dataset.d_vars() != m.input_dim)
        throw DataError("dimension mismatch: dataset has " + std::to_string(dataset.d_vars()) +
                        " variables, checkpoint expects " + std::to_string(m.input_dim));
    if (!dataset.normalization && tau_doc.contains("normalization")) {
        series::Normalization stats;
        stats.mean = tau_doc["normalization"]["mean"].get<std::vector<double>>();
        stats.stddev = tau_doc["normalization"]["stddev"].get<std::vector<double>>();
        dataset.normalization = std::move(stats);
    }

    const auto results = inference::segment_dataset(m, dataset, params);

    fs::create_directories(out_dir);
    std::ofstream seg_out(out_dir / "segments.csv");
    if (!seg_out) throw DataError("cannot write " + (out_dir / "segments.csv").string());
    seg_out << "id,start,end,label,global_score\n";

    std::size_t failures = 0;
    std::ofstream fail_out;
    for (const auto& item : results) {
        if (!item.result) {
            if (failures == 0) {
                fail_out.open(out_dir / "failures.csv");
                fail_out << "id,error\n";
            }
            fail_out << item.id << ",\"" << item.error << "\"\n";
            ++failures;
            continue;
        }
        const auto& res = *item.result;
        for (const auto& seg : res.segmentation.segments)
            seg_out << item.id << ',' << seg.start << ',' << seg.end << ',' << seg.label << ','
                    << format_double(res.global_score) << '\n';
        std::ofstream pred_out(out_dir / (item.id + ".pred.csv"));
        pred_out << "t,label\n";
        for (std::size_t t = 0; t < res.point_predictions.size(); ++t)
            pred_out << t << ',' << int(res.point_predictions[t]) << '\n';

        if (dump_dtw && res.global_score >= params.tau_star) {
            // Debug dump of the soft-DTW R/E matrices at the training gamma.
            const auto entry =
                std::find_if(dataset.entries.begin(), dataset.entries.end(),
                             [&](const series::DatasetEntry& e) {
                                 return e.instance.id == item.id;
                             });
            if (entry != dataset.entries.end()) {
                const auto inst = dataset.normalization
                                      ? series::normalized(entry->instance,
                                                           *dataset.normalization)
                                      : entry->instance;
                auto fwd = model::forward(m, inst);
                const auto map =
                    pseudolabel::normalize_activation(model::activation_raw(m, fwd.tape));
                const auto bits = pseudolabel::phi(map, params.label_length, params.tau);
                if (!bits.all_zero()) {
                    const auto costs = dtw::build_cost_matrix(bits, fwd.scores.local);
                    auto [value, ws] = dtw::sdtw_forward(costs, config.get_double("train.gamma"));
                    (void)value;
                    dtw::sdtw_backward(costs, ws);
                    std::ofstream r_out(out_dir / (item.id + ".R.csv"));
                    ws.dump_r_csv(r_out);
                    std::ofstream e_out(out_dir / (item.id + ".E.csv"));
                    ws.dump_e_csv(e_out);
                }
            }
        }
    }

    std::cout << "segmented " << (results.size() - failures) << "/" << results.size()
              << " instances into " << out_dir.string() << "\n";
    if (failures > 0)
        std::cerr << "warning: " << failures << " instance(s) failed; see failures.csv\n";
    return 0;
}

int cmd_eval(const fs::path& pred_dir, const fs::path& data_dir, const fs::path& out_file) {
    const auto dataset = series::load_dataset(data_dir);

    const fs::path segments_file = pred_dir / "segments.csv";
    std::ifstream seg_in(segments_file);
    if (!seg_in) throw DataError("missing predictions file " + segments_file.string());

    // Global score and predicted instance label per id from segments.csv.
    std::map<std::string, double> global_scores;
    std::map<std::string, int> predicted_label;
    std::string line;
    std::getline(seg_in, line);
    if (line != "id,start,end,label,global_score")
        throw DataError(segments_file.string() + ": unexpected header '" + line + "'");
    while (std::getline(seg_in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string id, start, end, label, score;
        std::getline(row, id, ',');
        std::getline(row, start, ',');
        std::getline(row, end, ',');
        std::getline(row, label, ',');
        std::getline(row, score, ',');
        global_scores[id] = std::stod(score);
        predicted_label[id] = std::max(predicted_label[id], std::stoi(label));
    }

    std::vector<std::uint8_t> point_pred, point_truth;
    std::vector<double> inst_scores;
    std::vector<std::uint8_t> inst_pred, inst_truth;
    for (const auto& entry : dataset.entries) {
        const auto& id = entry.instance.id;
        if (!entry.point_labels)
            throw DataError("instance " + id + " has no point-level ground truth");
        const fs::path pred_file = pred_dir / (id + ".pred.csv");
        std::ifstream in(pred_file);
        if (!in) throw DataError("missing point predictions " + pred_file.string());
        std::getline(in, line); // header
        std::size_t count = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw DataError(pred_file.string() + ": malformed row '" + line + "'");
            point_pred.push_back(static_cast<std::uint8_t>(std::stoi(line.substr(comma + 1))));
            ++count;
        }
        if (count != entry.instance.length)
            throw DataError(pred_file.string() + ": prediction length " + std::to_string(count) +
                            " does not match instance length " +
                            std::to_string(entry.instance.length));
        point_truth.insert(point_truth.end(), entry.point_labels->begin(),
                           entry.point_labels->end());

        const auto score_it = global_scores.find(id);
        if (score_it == global_scores.end())
            throw DataError("no segments recorded for instance " + id);
        inst_scores.push_back(score_it->second);
        inst_pred.push_back(static_cast<std::uint8_t>(predicted_label[id]));
        inst_truth.push_back(static_cast<std::uint8_t>(entry.label));
    }

    const auto point_report = eval::point_metrics(point_pred, point_truth);
    const auto instance_report = eval::point_metrics(inst_pred, inst_truth);
    double instance_auroc = std::numeric_limits<double>::quiet_NaN();
    try {
        instance_auroc = eval::auroc(inst_scores, inst_truth);
    } catch (const DataError&) {
        std::cerr << "warning: AUROC undefined (single-class ground truth)\n";
    }

    json doc;
    doc["point"] = json::parse(point_report.to_json());
    doc["instance"] = json::parse(instance_report.to_json());
    if (std::isfinite(instance_auroc)) doc["instance"]["auroc"] = instance_auroc;

    std::cout << "point-level metrics\n" << point_report.table() << "\n";
    std::cout << "instance-level metrics\n" << instance_report.table() << "\n";
    if (std::isfinite(instance_auroc)) std::cout << "  auroc      " << instance_auroc << "\n";

    if (!out_file.empty()) {
        std::ofstream out(out_file);
        if (!out) throw DataError("cannot write " + out_file.string());
        out << doc.dump(2) << '\n';
    }
    return 0;
}

int cmd_grid(const RunConfig& config, const fs::path& data_dir, const fs::path& out_file) {
    const auto arch = model_arch_from(config);
    const auto base_tc = train_config_from(config);
    const auto label_lengths = config.get_sizes("grid.label_length");
    const auto taus = config.get_doubles("grid.tau");
    const auto betas = config.get_doubles("grid.beta");
    const auto epochs = config.get_size("grid.max_epochs");
    if (label_lengths.empty() || taus.empty() || betas.empty())
        throw ConfigError("grid lists must not be empty");

    const auto train_set = series::load_dataset(data_dir / "train");
    const auto valid_set = series::load_dataset(data_dir / "valid");

    std::ofstream out(out_file);
    if (!out) throw DataError("cannot write " + out_file.string());
    out << "label_length,tau,beta,val_f1,tau_star,epochs\n";

    double best_f1 = -1.0;
    std::string best_cell;
    for (std::size_t L : label_lengths)
        for (double tau : taus)
            for (double beta : betas) {
                training::TrainConfig tc = base_tc;
                tc.label_length = L;
                tc.tau = tau;
                tc.beta = beta;
                tc.max_epochs = epochs;
                tc.validate();

                std::mt19937_64 rng(tc.seed);
                auto initial =
                    model::ScorerModel::init(train_set.d_vars(), arch.hidden_dim,
                                             arch.filter_size, arch.layers, arch.pooling, rng);
                initial.clamp_eps = arch.clamp_eps;
                const auto result =
                    training::train(std::move(initial), train_set, valid_set, tc);

                out << L << ',' << format_double(tau) << ',' << format_double(beta) << ','
                    << format_double(result.threshold.validation_f1) << ','
                    << format_double(result.threshold.tau_star) << ','
                    << result.state.epochs_done << '\n';
                out.flush();
                std::cout << "L=" << L << " tau=" << tau << " beta=" << beta << " -> val F1 "
                          << result.threshold.validation_f1 << "\n";
                if (result.threshold.validation_f1 > best_f1) {
                    best_f1 = result.threshold.validation_f1;
                    best_cell = "L=" + std::to_string(L) + " tau=" + format_double(tau) +
                                " beta=" + format_double(beta);
                }
            }
    std::cout << "best cell: " << best_cell << " (val F1 " << best_f1 << ")\n";
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"Weakly supervised temporal anomaly segmentation"};
    app.require_subcommand(1);
    app.allow_extras();

    std::string config_file;
    std::string out_dir, data_dir, model_path, pred_dir, out_file;
    bool resume = false, dump_dtw = false;

    auto add_config_opt = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "flat JSON config file");
        sub->allow_extras();
    };

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset (train/valid/test)");
    gen->add_option("--out", out_dir, "output dataset root")->required();
    add_config_opt(gen);

    auto* train = app.add_subcommand("train", "train a scorer on a dataset");
    train->add_option("--data", data_dir, "dataset root containing train/ and valid/")
        ->required();
    train->add_option("--out", model_path, "checkpoint output path (JSON)")->required();
    train->add_flag("--resume", resume, "continue from the stored training state");
    add_config_opt(train);

    auto* segment = app.add_subcommand("segment", "segment a dataset with a trained model");
    segment->add_option("--model", model_path, "checkpoint path")->required();
    segment->add_option("--data", data_dir, "dataset directory (a single split)")->required();
    segment->add_option("--out", out_dir, "output directory")->required();
    segment->add_flag("--dump-dtw", dump_dtw, "dump soft-DTW R/E matrices per instance");
    add_config_opt(segment);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate predictions against ground truth");
    eval_cmd->add_option("--pred", pred_dir, "segment output directory")->required();
    eval_cmd->add_option("--data", data_dir, "dataset directory with point labels")->required();
    eval_cmd->add_option("--out", out_file, "metrics JSON output path");

    auto* grid = app.add_subcommand("grid", "grid-search L/tau/beta by validation F1");
    grid->add_option("--data", data_dir, "dataset root containing train/ and valid/")
        ->required();
    grid->add_option("--out", out_file, "results CSV path")->required();
    add_config_opt(grid);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        RunConfig config;
        if (!config_file.empty()) config.load_file(config_file);
        CLI::App* sub = app.get_subcommands().front();
        config.apply_overrides(sub->remaining());

        if (sub == gen) return cmd_gen(config, out_dir);
        if (sub == train) return cmd_train(config, data_dir, model_path, resume);
        if (sub == segment) return cmd_segment(config, model_path, data_dir, out_dir, dump_dtw);
        if (sub == eval_cmd) return cmd_eval(pred_dir, data_dir, out_file);
        if (sub == grid) return cmd_grid(config, data_dir, out_file);
        return 1;
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 1;
    } catch (const DataError& ex) {
        std::cerr << "data error: " << ex.what() << "\n";
        return 2;
    } catch (const NumericError& ex) {
        std::cerr << "numerical failure: " << ex.what() << "\n";
        return 3;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
}

} // namespace taseg::cli
