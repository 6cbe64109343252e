#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vfa/error.hpp"

namespace vfa::cli {

// Fills options of `app` that were not given on the command line from a flat
// JSON object keyed by long option names ("voxel_h" and "voxel-h" both work).
// A nested object named after the subcommand is read the same way.
inline void apply_json_config(CLI::App* app, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("config: top level must be a JSON object");
    if (j.contains(app->get_name()) && j[app->get_name()].is_object()) {
        nlohmann::json section = j[app->get_name()];
        j.erase(app->get_name());
        j.update(section);
    }

    const auto scalar = [](const nlohmann::json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_object() || v.is_null()) throw InvalidArgument("config: unsupported value " + v.dump());
        return v.dump();
    };
    for (const auto& [key, value] : j.items()) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '_', '-');
        CLI::Option* opt = app->get_option_no_throw("--" + name);
        if (opt == nullptr || name == "config" || name == "help")
            throw InvalidArgument("config: unknown option '" + key + "' for " + app->get_name());
        if (opt->count() > 0) continue;  // the command line wins
        try {
            if (value.is_array()) {
                for (const auto& v : value) opt->add_result(scalar(v));
            } else if (value.is_boolean() && opt->get_expected_min() == 0) {
                if (!value.get<bool>()) continue;
                opt->add_result("true");
            } else {
                opt->add_result(scalar(value));
            }
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw InvalidArgument("config: option '" + key + "': " + e.what());
        }
    }
}

}  // namespace vfa::cli
