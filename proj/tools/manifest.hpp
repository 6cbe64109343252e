#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace vfa::cli {

std::string sha256_file(const std::filesystem::path& path);

// Replay record written as <out>/manifest.json. Timing values live under
// "timing" so that everything else is reproducible byte for byte.
class RunManifest {
public:
    explicit RunManifest(std::string command) : command_(std::move(command)) {}

    void set_config(nlohmann::ordered_json config) { config_ = std::move(config); }
    void add_input(const std::filesystem::path& path);
    // Every regular file below dir, in sorted order.
    void add_input_dir(const std::filesystem::path& dir);
    void add_output(const std::string& relative_path) { outputs_.push_back(relative_path); }
    void add_timing(const std::string& key, nlohmann::ordered_json value) { timing_[key] = std::move(value); }

    void write(const std::filesystem::path& out_dir, double wall_seconds);

private:
    std::string command_;
    nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
    nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
    nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
    nlohmann::ordered_json timing_ = nlohmann::ordered_json::object();
};

}  // namespace vfa::cli
