#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/model/forward.hpp"

namespace relatt {

// Hyperparameters of one training run. Defaults follow the documented
// protocol: lr 0.01, 2 layers, width 100, 2 bases, 10 negatives per positive,
// up to 6000 full-batch epochs with early stopping on filtered validation MRR
// every 100 epochs (patience 10 evaluations).
struct TrainConfig {
    double lr = 0.01;
    int layers = 2;
    double hidden_dropout = 0.0;
    double attention_dropout = 0.0;
    int dim = 100;  // hidden width; also the trainable-table feature width
    int bases = 2;
    int neg_ratio = 10;
    int max_epochs = 6000;
    int patience = 10;       // evaluations without improvement before stopping
    int eval_interval = 100; // epochs between validation evaluations
    std::uint64_t seed = 42;
    bool attention = true;
    bool add_inverse = true;
    bool add_self_loop = true;
    bool filtered_negatives = false;
    std::string feature_mode = "table";       // "table" | "file"
    std::string attn_nonlinearity = "none";   // "none" | "leaky_relu"
    std::string attn_scope = "per_layer";     // "per_layer" | "first_layer"
    bool attn_share = false;

    void validate() const {
        if (lr <= 0.0) throw ConfigError("config: lr must be positive");
        if (layers < 0) throw ConfigError("config: layers must be >= 0");
        if (hidden_dropout < 0.0 || hidden_dropout >= 1.0)
            throw ConfigError("config: hidden_dropout must be in [0, 1)");
        if (attention_dropout < 0.0 || attention_dropout >= 1.0)
            throw ConfigError("config: attention_dropout must be in [0, 1)");
        if (dim < 1) throw ConfigError("config: dim must be >= 1");
        if (bases < 1) throw ConfigError("config: bases must be >= 1");
        if (neg_ratio < 1) throw ConfigError("config: neg_ratio must be >= 1");
        if (max_epochs < 1) throw ConfigError("config: max_epochs must be >= 1");
        if (patience < 1) throw ConfigError("config: patience must be >= 1");
        if (eval_interval < 1) throw ConfigError("config: eval_interval must be >= 1");
        if (feature_mode != "table" && feature_mode != "file")
            throw ConfigError("config: feature_mode must be 'table' or 'file'");
        if (attn_nonlinearity != "none" && attn_nonlinearity != "leaky_relu")
            throw ConfigError("config: attn_nonlinearity must be 'none' or 'leaky_relu'");
        if (attn_scope != "per_layer" && attn_scope != "first_layer")
            throw ConfigError("config: attn_scope must be 'per_layer' or 'first_layer'");
    }

    ForwardOptions forward_options(bool training) const {
        ForwardOptions opt;
        opt.attention = attention;
        opt.scope = attn_scope == "first_layer" ? AttnScope::FirstLayer : AttnScope::PerLayer;
        opt.nonlinearity = attn_nonlinearity == "leaky_relu" ? AttnNonlinearity::LeakyRelu
                                                             : AttnNonlinearity::None;
        opt.hidden_dropout = hidden_dropout;
        opt.attention_dropout = attention_dropout;
        opt.training = training;
        return opt;
    }

    // Key/value view in declaration order; the CLI layer builds the canonical
    // config echo and hash from this.
    std::vector<std::pair<std::string, std::string>> to_kv() const;
};

namespace detail {
inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> TrainConfig::to_kv() const {
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    return {
        {"lr", detail::fmt_double(lr)},
        {"layers", std::to_string(layers)},
        {"hidden_dropout", detail::fmt_double(hidden_dropout)},
        {"attention_dropout", detail::fmt_double(attention_dropout)},
        {"dim", std::to_string(dim)},
        {"bases", std::to_string(bases)},
        {"neg_ratio", std::to_string(neg_ratio)},
        {"max_epochs", std::to_string(max_epochs)},
        {"patience", std::to_string(patience)},
        {"eval_interval", std::to_string(eval_interval)},
        {"seed", std::to_string(seed)},
        {"attention", b(attention)},
        {"add_inverse", b(add_inverse)},
        {"add_self_loop", b(add_self_loop)},
        {"filtered_negatives", b(filtered_negatives)},
        {"feature_mode", feature_mode},
        {"attn_nonlinearity", attn_nonlinearity},
        {"attn_scope", attn_scope},
        {"attn_share", b(attn_share)},
    };
}

}  // namespace relatt
