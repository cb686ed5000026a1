#pragma once

#include <cstdlib>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/train/config.hpp"
#include "relatt/train/model_io.hpp"

namespace relatt {

// Effective configuration of one CLI run: training hyperparameters plus
// paths and command-specific options. Every referenced path is validated
// before any compute starts; unknown config keys are rejected.
struct RunConfig {
    TrainConfig train;
    std::string data;        // dataset directory (train/evaluate)
    std::string out = ".";   // output directory, or output file for `infer`
    std::string checkpoint;  // model checkpoint path
    std::string queries;     // query-graph root directory (match)
    std::string reference;   // reference dataset directory (match)
    std::string graph;       // input graph directory (infer)
    double th = 1.0;         // neighbor threshold (match)
    bool write_ranks = false;
    bool raw_metrics = false;
    bool features_only = false;  // match with raw features instead of the model

    std::vector<std::pair<std::string, std::string>> to_kv() const {
        auto kv = train.to_kv();
        auto b = [](bool v) { return std::string(v ? "true" : "false"); };
        kv.emplace_back("data", data);
        kv.emplace_back("out", out);
        kv.emplace_back("checkpoint", checkpoint);
        kv.emplace_back("queries", queries);
        kv.emplace_back("reference", reference);
        kv.emplace_back("graph", graph);
        kv.emplace_back("th", detail::fmt_double(th));
        kv.emplace_back("write_ranks", b(write_ranks));
        kv.emplace_back("raw_metrics", b(raw_metrics));
        kv.emplace_back("features_only", b(features_only));
        return kv;
    }

    std::uint64_t hash() const { return config_hash(to_kv()); }
};

// One key/value onto the run config; training keys are tried first. Throws
// ConfigError naming the key when it is unknown or its value has the wrong
// type.
inline void apply_run_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (apply_train_kv(cfg.train, key, value)) return;
    if (key == "data") cfg.data = value;
    else if (key == "out") cfg.out = value;
    else if (key == "checkpoint") cfg.checkpoint = value;
    else if (key == "queries") cfg.queries = value;
    else if (key == "reference") cfg.reference = value;
    else if (key == "graph") cfg.graph = value;
    else if (key == "th") {
        if (!detail::parse_double_value(value, cfg.th))
            throw ConfigError("config key 'th': expected a real number, got '" + value + "'");
    } else if (key == "write_ranks") {
        if (!detail::parse_bool_value(value, cfg.write_ranks))
            throw ConfigError("config key 'write_ranks': expected a boolean, got '" + value + "'");
    } else if (key == "raw_metrics") {
        if (!detail::parse_bool_value(value, cfg.raw_metrics))
            throw ConfigError("config key 'raw_metrics': expected a boolean, got '" + value + "'");
    } else if (key == "features_only") {
        if (!detail::parse_bool_value(value, cfg.features_only))
            throw ConfigError("config key 'features_only': expected a boolean, got '" + value +
                              "'");
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// `key = value` text format, '#' starts a comment, blank lines ignored.
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        std::string t = detail::trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("'" + path + "' line " + std::to_string(line_no) +
                             ": expected key = value");
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": empty key");
        apply_run_kv(cfg, key, value);
    }
}

// RELATT_SEED environment variable: consulted after the config file and
// before flags, so an explicit --seed always wins.
inline void apply_env_seed(RunConfig& cfg) {
    const char* env = std::getenv("RELATT_SEED");
    if (!env || !*env) return;
    std::uint64_t seed = 0;
    if (!detail::parse_u64_value(env, seed))
        throw ConfigError("RELATT_SEED: expected an unsigned integer, got '" + std::string(env) +
                          "'");
    cfg.train.seed = seed;
}

}  // namespace relatt
