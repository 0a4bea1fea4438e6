#include "taseg/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "taseg/errors.hpp"

namespace taseg::series {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& token, const std::string& context) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw DataError(context + ": cannot parse number '" + token + "'");
    if (!std::isfinite(v)) throw DataError(context + ": non-finite value '" + token + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string row_context(const fs::path& file, std::size_t row) {
    return file.string() + ":" + std::to_string(row + 1);
}

TemporalInstance load_instance_csv(const fs::path& file, const std::string& id) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open instance file " + file.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty instance file " + file.string());
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "t")
        throw DataError(file.string() + ": expected header t,f0,...");
    const std::size_t d_vars = header.size() - 1;

    std::vector<std::vector<double>> columns(d_vars);
    std::size_t row = 1;
    long expected_t = 0;
    while (std::getline(in, line)) {
        if (line.empty()) { ++row; continue; }
        const auto fields = split_csv_line(line);
        if (fields.size() != d_vars + 1)
            throw DataError(row_context(file, row) + ": expected " +
                            std::to_string(d_vars + 1) + " fields, got " +
                            std::to_string(fields.size()));
        const double tval = parse_double(fields[0], row_context(file, row));
        if (tval != static_cast<double>(expected_t))
            throw DataError(row_context(file, row) + ": t must increase from 0 by 1");
        for (std::size_t v = 0; v < d_vars; ++v)
            columns[v].push_back(parse_double(fields[v + 1], row_context(file, row)));
        ++expected_t;
        ++row;
    }
    if (expected_t == 0) throw DataError(file.string() + ": no data rows");

    TemporalInstance inst;
    inst.id = id;
    inst.d_vars = d_vars;
    inst.length = static_cast<std::size_t>(expected_t);
    inst.values.reserve(d_vars * inst.length);
    for (std::size_t v = 0; v < d_vars; ++v)
        inst.values.insert(inst.values.end(), columns[v].begin(), columns[v].end());
    return inst;
}

PointLabels load_point_labels_csv(const fs::path& file, std::size_t expected_length) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open point-label file " + file.string());
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"t", "label"})
        throw DataError(file.string() + ": expected header t,label");
    PointLabels labels;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        if (line.empty()) { ++row; continue; }
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw DataError(row_context(file, row) + ": expected 2 fields");
        const double v = parse_double(fields[1], row_context(file, row));
        if (v != 0.0 && v != 1.0)
            throw DataError(row_context(file, row) + ": point label must be 0 or 1, got " + fields[1]);
        labels.push_back(static_cast<std::uint8_t>(v));
        ++row;
    }
    if (labels.size() != expected_length)
        throw DataError(file.string() + ": point-label length " + std::to_string(labels.size()) +
                        " does not match instance length " + std::to_string(expected_length));
    return labels;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

void TemporalInstance::validate() const {
    if (d_vars < 1 || length < 1)
        throw DataError("instance " + id + ": D and T must be >= 1");
    if (values.size() != d_vars * length)
        throw DataError("instance " + id + ": value buffer shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw DataError("instance " + id + ": non-finite value at flat index " +
                            std::to_string(i));
}

void Dataset::validate() const {
    const std::size_t d = d_vars();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        e.instance.validate();
        if (e.instance.d_vars != d)
            throw DataError("instance " + e.instance.id + ": has " +
                            std::to_string(e.instance.d_vars) + " variables, dataset has " +
                            std::to_string(d));
        if (e.label != 0 && e.label != 1)
            throw DataError("instance " + e.instance.id + ": non-binary label " +
                            std::to_string(e.label));
        if (i > 0 && entries[i - 1].instance.id == e.instance.id)
            throw DataError("duplicate instance id " + e.instance.id);
        if (e.point_labels) {
            if (e.point_labels->size() != e.instance.length)
                throw DataError("instance " + e.instance.id + ": point-label length mismatch");
            const bool any = std::any_of(e.point_labels->begin(), e.point_labels->end(),
                                         [](std::uint8_t b) { return b != 0; });
            if (static_cast<int>(any) != e.label)
                throw DataError("instance " + e.instance.id +
                                ": point labels imply label " + std::to_string(int(any)) +
                                " but stored label is " + std::to_string(e.label));
        }
    }
}

void SynthConfig::validate() const {
    if (instances < 1) throw ConfigError("synth: instances must be >= 1");
    if (d_vars < 1) throw ConfigError("synth: d_vars must be >= 1");
    if (length < 1) throw ConfigError("synth: length must be >= 1");
    if (!(anomaly_ratio > 0.0 && anomaly_ratio < 1.0))
        throw ConfigError("synth: anomaly_ratio must lie in (0, 1)");
    if (segment_min < 1 || segment_min > segment_max)
        throw ConfigError("synth: segment bounds must satisfy 1 <= min <= max");
    if (segment_max > length)
        throw ConfigError("synth: segment_max exceeds instance length (infeasible)");
    if (noise_std < 0.0) throw ConfigError("synth: noise_std must be >= 0");
    if (anomalous_instances > static_cast<int>(instances))
        throw ConfigError("synth: anomalous_instances exceeds instance count");
}

Dataset load_dataset(const fs::path& root) {
    const fs::path labels_file = root / "labels.csv";
    if (!fs::exists(labels_file))
        throw DataError("missing labels file " + labels_file.string());

    std::ifstream in(labels_file);
    if (!in) throw DataError("cannot open " + labels_file.string());
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"id", "label"})
        throw DataError(labels_file.string() + ": expected header id,label");

    std::vector<std::pair<std::string, int>> labels;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        if (line.empty()) { ++row; continue; }
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw DataError(row_context(labels_file, row) + ": expected 2 fields");
        const double v = parse_double(fields[1], row_context(labels_file, row));
        if (v != 0.0 && v != 1.0)
            throw DataError(row_context(labels_file, row) + ": label must be 0 or 1, got " +
                            fields[1]);
        labels.emplace_back(fields[0], static_cast<int>(v));
        ++row;
    }
    std::sort(labels.begin(), labels.end());

    Dataset dataset;
    for (const auto& [id, label] : labels) {
        DatasetEntry entry;
        entry.instance = load_instance_csv(root / "instances" / (id + ".csv"), id);
        entry.label = label;
        const fs::path pl = root / "point_labels" / (id + ".csv");
        if (fs::exists(pl)) entry.point_labels = load_point_labels_csv(pl, entry.instance.length);
        dataset.entries.push_back(std::move(entry));
    }

    const fs::path manifest_file = root / "manifest.json";
    if (fs::exists(manifest_file)) {
        std::ifstream mf(manifest_file);
        json manifest;
        try {
            mf >> manifest;
        } catch (const json::exception& ex) {
            throw DataError(manifest_file.string() + ": " + ex.what());
        }
        dataset.split_tag = manifest.value("split", "");
        if (manifest.contains("normalization")) {
            Normalization stats;
            stats.mean = manifest["normalization"]["mean"].get<std::vector<double>>();
            stats.stddev = manifest["normalization"]["stddev"].get<std::vector<double>>();
            dataset.normalization = std::move(stats);
        }
        if (manifest.contains("d_vars") && !dataset.entries.empty() &&
            manifest["d_vars"].get<std::size_t>() != dataset.d_vars())
            throw DataError(manifest_file.string() + ": d_vars does not match instances");
    }

    dataset.validate();
    return dataset;
}

void save_dataset(const Dataset& dataset, const fs::path& root) {
    dataset.validate();
    fs::create_directories(root / "instances");
    bool any_points = false;

    {
        std::ofstream out(root / "labels.csv");
        out << "id,label\n";
        for (const auto& e : dataset.entries) out << e.instance.id << ',' << e.label << '\n';
    }
    for (const auto& e : dataset.entries) {
        std::ofstream out(root / "instances" / (e.instance.id + ".csv"));
        out << 't';
        for (std::size_t v = 0; v < e.instance.d_vars; ++v) out << ",f" << v;
        out << '\n';
        for (std::size_t t = 0; t < e.instance.length; ++t) {
            out << t;
            for (std::size_t v = 0; v < e.instance.d_vars; ++v)
                out << ',' << format_double(e.instance.at(v, t));
            out << '\n';
        }
        if (e.point_labels) any_points = true;
    }
    if (any_points) {
        fs::create_directories(root / "point_labels");
        for (const auto& e : dataset.entries) {
            if (!e.point_labels) continue;
            std::ofstream out(root / "point_labels" / (e.instance.id + ".csv"));
            out << "t,label\n";
            for (std::size_t t = 0; t < e.point_labels->size(); ++t)
                out << t << ',' << int((*e.point_labels)[t]) << '\n';
        }
    }

    json manifest;
    manifest["schema"] = "taseg-dataset-v1";
    manifest["count"] = dataset.size();
    manifest["d_vars"] = dataset.d_vars();
    manifest["length"] = dataset.entries.empty() ? 0 : dataset.entries.front().instance.length;
    manifest["split"] = dataset.split_tag;
    if (dataset.normalization) {
        manifest["normalization"]["mean"] = dataset.normalization->mean;
        manifest["normalization"]["stddev"] = dataset.normalization->stddev;
    }
    std::ofstream out(root / "manifest.json");
    out << manifest.dump(2) << '\n';
}

std::vector<TemporalInstance> split_stream(const TemporalInstance& stream,
                                           std::size_t chunk_length) {
    if (chunk_length < 1) throw ConfigError("split_stream: chunk_length must be >= 1");
    stream.validate();
    std::vector<TemporalInstance> chunks;
    const std::size_t count = stream.length / chunk_length;
    for (std::size_t c = 0; c < count; ++c) {
        TemporalInstance chunk;
        char suffix[32];
        std::snprintf(suffix, sizeof(suffix), "_%04zu", c);
        chunk.id = stream.id + suffix;
        chunk.d_vars = stream.d_vars;
        chunk.length = chunk_length;
        chunk.values.resize(stream.d_vars * chunk_length);
        for (std::size_t v = 0; v < stream.d_vars; ++v)
            std::copy_n(stream.row(v) + c * chunk_length, chunk_length, chunk.row(v));
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t N = config.instances, D = config.d_vars, T = config.length;

    std::mt19937_64 rng(mix_seed(seed, 0));

    // Dataset-level base waveform parameters shared across instances.
    std::vector<double> base_freq(D), base_amp(D), second_amp(D);
    std::uniform_real_distribution<double> freq_dist(0.02, 0.05);
    std::uniform_real_distribution<double> amp_dist(0.8, 1.2);
    for (std::size_t v = 0; v < D; ++v) {
        base_freq[v] = freq_dist(rng);
        base_amp[v] = amp_dist(rng);
        second_amp[v] = 0.4 * amp_dist(rng);
    }

    std::size_t n_anomalous;
    if (config.anomalous_instances >= 0) {
        n_anomalous = static_cast<std::size_t>(config.anomalous_instances);
    } else {
        // Expected anomalous points per anomalous instance: mean 2 segments
        // of mean length (min+max)/2.
        const double per_instance =
            static_cast<double>(config.segment_min + config.segment_max);
        const double want = config.anomaly_ratio * static_cast<double>(N * T);
        n_anomalous = static_cast<std::size_t>(std::llround(want / per_instance));
        n_anomalous = std::min(n_anomalous, N);
    }

    std::vector<std::size_t> order(N);
    for (std::size_t i = 0; i < N; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::uint8_t> is_anomalous(N, 0);
    for (std::size_t i = 0; i < n_anomalous; ++i) is_anomalous[order[i]] = 1;

    const double two_pi = 2.0 * std::acos(-1.0);
    Dataset dataset;
    for (std::size_t i = 0; i < N; ++i) {
        std::mt19937_64 irng(mix_seed(seed, i + 1));
        std::uniform_real_distribution<double> phase_dist(0.0, two_pi);
        std::normal_distribution<double> noise(0.0, config.noise_std);

        DatasetEntry entry;
        auto& inst = entry.instance;
        char name[32];
        std::snprintf(name, sizeof(name), "inst_%05zu", i);
        inst.id = name;
        inst.d_vars = D;
        inst.length = T;
        inst.values.resize(D * T);

        std::vector<double> phase(D);
        for (std::size_t v = 0; v < D; ++v) phase[v] = phase_dist(irng);
        for (std::size_t v = 0; v < D; ++v)
            for (std::size_t t = 0; t < T; ++t) {
                const double x = static_cast<double>(t);
                inst.at(v, t) = base_amp[v] * std::sin(two_pi * base_freq[v] * x + phase[v]) +
                                second_amp[v] * std::sin(two_pi * 2.7 * base_freq[v] * x) +
                                noise(irng);
            }

        PointLabels points(T, 0);
        if (is_anomalous[i]) {
            std::uniform_int_distribution<std::size_t> nseg_dist(1, 3);
            std::uniform_int_distribution<std::size_t> len_dist(config.segment_min,
                                                                config.segment_max);
            std::uniform_int_distribution<int> family_dist(0, 2);
            const std::size_t n_segments = nseg_dist(irng);
            for (std::size_t s = 0; s < n_segments; ++s) {
                const std::size_t len = len_dist(irng);
                std::uniform_int_distribution<std::size_t> start_dist(0, T - len);
                std::size_t start = 0;
                bool placed = false;
                for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
                    start = start_dist(irng);
                    placed = std::all_of(points.begin() + start, points.begin() + start + len,
                                         [](std::uint8_t b) { return b == 0; });
                }
                if (!placed) continue; // crowded instance, skip this segment

                const int family = family_dist(irng);
                std::uniform_real_distribution<double> shift_dist(2.5, 3.5);
                std::uniform_real_distribution<double> scale_dist(2.5, 3.5);
                std::uniform_real_distribution<double> freq_mult_dist(4.0, 5.0);
                if (family == 0) {
                    const double delta =
                        (irng() & 1 ? 1.0 : -1.0) * shift_dist(irng);
                    for (std::size_t v = 0; v < D; ++v)
                        for (std::size_t t = start; t < start + len; ++t)
                            inst.at(v, t) += delta;
                } else if (family == 1) {
                    const double factor = scale_dist(irng);
                    for (std::size_t v = 0; v < D; ++v)
                        for (std::size_t t = start; t < start + len; ++t)
                            inst.at(v, t) *= factor;
                } else {
                    const double mult = freq_mult_dist(irng);
                    for (std::size_t v = 0; v < D; ++v)
                        for (std::size_t t = start; t < start + len; ++t) {
                            const double x = static_cast<double>(t);
                            inst.at(v, t) =
                                base_amp[v] *
                                    std::sin(two_pi * base_freq[v] * mult * x + phase[v]) +
                                noise(irng);
                        }
                }
                std::fill(points.begin() + start, points.begin() + start + len, 1);
            }
        }

        entry.label =
            std::any_of(points.begin(), points.end(), [](std::uint8_t b) { return b != 0; })
                ? 1 : 0;
        entry.point_labels = std::move(points);
        dataset.entries.push_back(std::move(entry));
    }

    std::sort(dataset.entries.begin(), dataset.entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) {
                  return a.instance.id < b.instance.id;
              });
    dataset.validate();
    return dataset;
}

Normalization compute_normalization(const Dataset& train) {
    if (train.entries.empty()) throw DataError("compute_normalization: empty dataset");
    const std::size_t D = train.d_vars();
    Normalization stats;
    stats.mean.assign(D, 0.0);
    stats.stddev.assign(D, 0.0);

    std::size_t total = 0;
    for (const auto& e : train.entries) {
        for (std::size_t v = 0; v < D; ++v)
            for (std::size_t t = 0; t < e.instance.length; ++t)
                stats.mean[v] += e.instance.at(v, t);
        total += e.instance.length;
    }
    for (std::size_t v = 0; v < D; ++v) stats.mean[v] /= static_cast<double>(total);
    for (const auto& e : train.entries)
        for (std::size_t v = 0; v < D; ++v)
            for (std::size_t t = 0; t < e.instance.length; ++t) {
                const double d = e.instance.at(v, t) - stats.mean[v];
                stats.stddev[v] += d * d;
            }
    for (std::size_t v = 0; v < D; ++v) {
        stats.stddev[v] = std::sqrt(stats.stddev[v] / static_cast<double>(total));
        if (stats.stddev[v] < 1e-12) stats.stddev[v] = 1.0; // constant variable
    }
    return stats;
}

TemporalInstance normalized(const TemporalInstance& instance, const Normalization& stats) {
    if (stats.mean.size() != instance.d_vars || stats.stddev.size() != instance.d_vars)
        throw DataError("normalization stats dimensionality does not match instance " +
                        instance.id);
    TemporalInstance out = instance;
    for (std::size_t v = 0; v < out.d_vars; ++v) {
        const double m = stats.mean[v];
        const double inv = 1.0 / stats.stddev[v];
        for (std::size_t t = 0; t < out.length; ++t) out.at(v, t) = (out.at(v, t) - m) * inv;
    }
    return out;
}

std::array<Dataset, 3> split_dataset(const Dataset& dataset,
                                     const std::array<std::size_t, 3>& ratio,
                                     std::uint64_t seed) {
    const std::size_t parts = ratio[0] + ratio[1] + ratio[2];
    if (parts == 0) throw ConfigError("split_dataset: ratio parts sum to zero");

    std::array<Dataset, 3> out;
    out[0].split_tag = "train";
    out[1].split_tag = "valid";
    out[2].split_tag = "test";

    // Stratify by instance label so each split sees both classes.
    std::mt19937_64 rng(mix_seed(seed, 0x5eed));
    for (int label : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < dataset.entries.size(); ++i)
            if (dataset.entries[i].label == label) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);

        // Largest-remainder apportionment of the stratum across splits.
        const std::size_t n = idx.size();
        std::array<std::size_t, 3> count{};
        std::array<double, 3> remainder{};
        std::size_t assigned = 0;
        for (int s = 0; s < 3; ++s) {
            const double exact = static_cast<double>(n * ratio[s]) / static_cast<double>(parts);
            count[s] = static_cast<std::size_t>(exact);
            remainder[s] = exact - static_cast<double>(count[s]);
            assigned += count[s];
        }
        while (assigned < n) {
            int best = 0;
            for (int s = 1; s < 3; ++s)
                if (remainder[s] > remainder[best]) best = s;
            ++count[best];
            remainder[best] = -1.0;
            ++assigned;
        }

        std::size_t cursor = 0;
        for (int s = 0; s < 3; ++s)
            for (std::size_t k = 0; k < count[s]; ++k)
                out[s].entries.push_back(dataset.entries[idx[cursor++]]);
    }

    for (auto& split : out) {
        std::sort(split.entries.begin(), split.entries.end(),
                  [](const DatasetEntry& a, const DatasetEntry& b) {
                      return a.instance.id < b.instance.id;
                  });
        split.normalization = dataset.normalization;
    }
    return out;
}

} // namespace taseg::series
