#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/features.hpp"
#include "relatt/kg/vocab.hpp"
#include "relatt/model/params.hpp"
#include "relatt/num/checkpoint.hpp"
#include "relatt/num/rng.hpp"
#include "relatt/train/config.hpp"

namespace relatt {

// Sorted "key = value" lines; the stable input for config hashing and echo.
inline std::string canonical_config_text(std::vector<std::pair<std::string, std::string>> kv) {
    std::sort(kv.begin(), kv.end());
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

inline std::uint64_t config_hash(const std::vector<std::pair<std::string, std::string>>& kv) {
    return fnv1a64(canonical_config_text(kv));
}

namespace detail {

inline bool parse_bool_value(const std::string& v, bool& out) {
    if (v == "true" || v == "1" || v == "on") out = true;
    else if (v == "false" || v == "0" || v == "off") out = false;
    else return false;
    return true;
}

inline bool parse_int_value(const std::string& v, int& out) {
    char* end = nullptr;
    long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') return false;
    out = static_cast<int>(x);
    return true;
}

inline bool parse_u64_value(const std::string& v, std::uint64_t& out) {
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') return false;
    out = static_cast<std::uint64_t>(x);
    return true;
}

inline bool parse_double_value(const std::string& v, double& out) {
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') return false;
    out = x;
    return true;
}

}  // namespace detail

// Applies one key/value onto a TrainConfig. Returns false when the key is not
// a training key (the CLI layer then tries its own keys). Type mismatches
// raise ConfigError naming the key and the expected type.
inline bool apply_train_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
    auto want = [&](const char* type) -> ConfigError {
        return ConfigError("config key '" + key + "': expected " + type + ", got '" + value + "'");
    };
    auto set_d = [&](double& dst) {
        if (!detail::parse_double_value(value, dst)) throw want("a real number");
    };
    auto set_i = [&](int& dst) {
        if (!detail::parse_int_value(value, dst)) throw want("an integer");
    };
    auto set_b = [&](bool& dst) {
        if (!detail::parse_bool_value(value, dst)) throw want("a boolean (true/false)");
    };

    if (key == "lr") set_d(cfg.lr);
    else if (key == "layers") set_i(cfg.layers);
    else if (key == "hidden_dropout") set_d(cfg.hidden_dropout);
    else if (key == "attention_dropout") set_d(cfg.attention_dropout);
    else if (key == "dim") set_i(cfg.dim);
    else if (key == "bases") set_i(cfg.bases);
    else if (key == "neg_ratio") set_i(cfg.neg_ratio);
    else if (key == "max_epochs") set_i(cfg.max_epochs);
    else if (key == "patience") set_i(cfg.patience);
    else if (key == "eval_interval") set_i(cfg.eval_interval);
    else if (key == "seed") {
        if (!detail::parse_u64_value(value, cfg.seed)) throw want("an unsigned integer");
    } else if (key == "attention") set_b(cfg.attention);
    else if (key == "add_inverse") set_b(cfg.add_inverse);
    else if (key == "add_self_loop") set_b(cfg.add_self_loop);
    else if (key == "filtered_negatives") set_b(cfg.filtered_negatives);
    else if (key == "feature_mode") cfg.feature_mode = value;
    else if (key == "attn_nonlinearity") cfg.attn_nonlinearity = value;
    else if (key == "attn_scope") cfg.attn_scope = value;
    else if (key == "attn_share") set_b(cfg.attn_share);
    else return false;
    return true;
}

// A trained model with everything needed to evaluate, match and infer:
// parameters, the feature table it was trained with, both vocabularies and
// the training configuration.
struct TrainedModel {
    ModelParams params;
    FeatureSource features;
    Vocab entities;
    Vocab relations;  // base relations, pre-augmentation
    TrainConfig config;

    bool inductive() const { return !features.trainable(); }
};

inline void save_model(const std::string& path, const TrainedModel& model) {
    Checkpoint ckpt;
    auto kv = model.config.to_kv();
    ckpt.config_hash = config_hash(kv);
    ckpt.strings["config"] = canonical_config_text(kv);
    std::string ents, rels;
    for (const std::string& n : model.entities.names()) {
        ents += n;
        ents += '\n';
    }
    for (const std::string& n : model.relations.names()) {
        rels += n;
        rels += '\n';
    }
    ckpt.strings["entities"] = ents;
    ckpt.strings["relations"] = rels;
    for (const auto& [name, tensor] : model.params.named()) ckpt.tensors.emplace_back(name, *tensor);
    ckpt.tensors.emplace_back(model.features.trainable() ? "embedding" : "features",
                              model.features.values());
    save_checkpoint(ckpt, path);
}

inline TrainedModel load_model(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    TrainedModel model;

    std::istringstream cfg_lines(ckpt.string("config"));
    std::string line;
    while (std::getline(cfg_lines, line)) {
        if (line.empty()) continue;
        auto sep = line.find(" = ");
        if (sep == std::string::npos) throw ParseError("checkpoint config: bad line '" + line + "'");
        std::string key = line.substr(0, sep);
        std::string value = line.substr(sep + 3);
        if (!apply_train_kv(model.config, key, value))
            throw ParseError("checkpoint config: unknown key '" + key + "'");
    }

    auto read_vocab = [&](const char* section, Vocab& vocab) {
        std::istringstream ls(ckpt.string(section));
        std::string name;
        while (std::getline(ls, name))
            if (!name.empty()) vocab.add(name);
    };
    read_vocab("entities", model.entities);
    read_vocab("relations", model.relations);

    bool trainable = ckpt.has_tensor("embedding");
    Tensor feats = ckpt.tensor(trainable ? "embedding" : "features");
    if (feats.rows() != model.entities.size())
        throw ParseError("checkpoint: feature rows do not match entity vocabulary");
    model.features = FeatureSource(
        trainable ? FeatureSource::Mode::Trainable : FeatureSource::Mode::FileBacked, feats);

    ModelDims dims;
    dims.n_relations_aug = ckpt.tensor("rel_feats").rows();
    dims.feature_dim = feats.cols();
    dims.hidden_dim = model.config.dim;
    dims.layers = model.config.layers;
    dims.bases = model.config.bases;
    dims.share_attn = model.config.attn_share;
    Rng dummy(0);
    model.params = ModelParams::init(dims, dummy);
    for (auto& [name, tensor] : model.params.named()) {
        const Tensor& stored = ckpt.tensor(name);
        if (!stored.same_shape(*tensor))
            throw ParseError("checkpoint: tensor '" + name + "' has shape " + stored.shape_str() +
                             ", expected " + tensor->shape_str());
        *tensor = stored;
    }
    return model;
}

}  // namespace relatt
