#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relatt/cli/config.hpp"
#include "relatt/version.hpp"

namespace relatt {

struct PhaseTiming {
    std::string name;
    double seconds = 0.0;
};

// Written atomically at run end; the config hash is a stable FNV-1a over the
// sorted effective key/value text, so it changes exactly when some effective
// value changes.
struct RunManifest {
    std::string command;
    RunConfig config;
    std::vector<PhaseTiming> timings;
};

inline void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc | std::ios::binary);
        if (!os) throw IoError("cannot open '" + tmp + "' for writing");
        os << content;
        if (!os) throw IoError("write failed for '" + tmp + "'");
    }
    fs::rename(tmp, path);
}

inline std::string render_manifest(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["toolkit_version"] = RELATT_VERSION;
    j["seed"] = m.config.train.seed;
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(m.config.hash()));
    j["config_hash"] = hash_hex;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.config.to_kv()) cfg[k] = v;
    j["config"] = cfg;
    nlohmann::ordered_json timings = nlohmann::ordered_json::object();
    for (const PhaseTiming& t : m.timings) timings[t.name] = t.seconds;
    j["timings_sec"] = timings;
    return j.dump(2) + "\n";
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
    write_text_atomic(path, render_manifest(m));
}

}  // namespace relatt
