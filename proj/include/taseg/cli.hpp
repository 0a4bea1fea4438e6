#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

// Command-line wiring: dataset generation, training, segmentation,
// evaluation, and a small grid-search runner.

namespace taseg::cli {

// Flat JSON configuration with dotted keys, mirrored by --key value
// overrides. Every key is validated against a registry of known keys and
// module preconditions before any command does work.
class RunConfig {
public:
    RunConfig(); // defaults

    void load_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& raw_value);
    void apply_overrides(const std::vector<std::string>& extra_args);

    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    long get_long(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::size_t> get_sizes(const std::string& key) const;

    const nlohmann::json& values() const { return values_; }

private:
    nlohmann::json values_;
};

// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
// failure.
int cmd_gen(const RunConfig& config, const std::filesystem::path& out_dir);
int cmd_train(const RunConfig& config, const std::filesystem::path& data_dir,
              const std::filesystem::path& out_model, bool resume);
int cmd_segment(const RunConfig& config, const std::filesystem::path& model_path,
                const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
                bool dump_dtw);
int cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& data_dir,
             const std::filesystem::path& out_file);
int cmd_grid(const RunConfig& config, const std::filesystem::path& data_dir,
             const std::filesystem::path& out_file);

int run(int argc, char** argv);

} // namespace taseg::cli
