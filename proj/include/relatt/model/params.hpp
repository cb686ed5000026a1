#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/num/rng.hpp"
#include "relatt/num/tensor.hpp"

namespace relatt {

// Dimension plan for the parameter stack. Layer l maps d_in(l) -> hidden_dim
// with d_in(0) = feature_dim; the attention projection width equals the
// layer's output dimension. With zero layers the decoder works directly on
// the feature dimension.
struct ModelDims {
    int n_relations_aug = 0;  // relation rows incl. inverse relations
    int feature_dim = 0;
    int hidden_dim = 0;
    int layers = 0;
    int bases = 1;
    bool share_attn = false;  // reuse layer 0's attention transform everywhere

    int layer_in(int l) const { return l == 0 ? feature_dim : hidden_dim; }
    int layer_out(int) const { return hidden_dim; }
    int decoder_dim() const { return layers > 0 ? hidden_dim : feature_dim; }
    // relation features live at the input feature dimension
    int rel_feat_dim() const { return feature_dim; }

    void validate() const {
        if (n_relations_aug < 1) throw ConfigError("model dims: no relations");
        if (feature_dim < 1) throw ConfigError("model dims: feature_dim must be >= 1");
        if (layers < 0) throw ConfigError("model dims: negative layer count");
        if (layers > 0 && hidden_dim < 1) throw ConfigError("model dims: hidden_dim must be >= 1");
        if (bases < 1) throw ConfigError("model dims: bases must be >= 1");
        if (share_attn && layers > 1 && feature_dim != hidden_dim)
            throw ConfigError("model dims: shared attention requires uniform layer widths");
    }
};

struct LayerParams {
    Tensor attn_W;                  // d_in x d_attn, shared across the triple slots
    Tensor attn_a;                  // 3 * d_attn
    std::optional<Tensor> attn_Wr;  // rel-slot projection, only when d_in != rel_feat_dim
    std::vector<Tensor> bases;      // B matrices d_in x d_out
    Tensor coeffs;                  // K_aug x B
    Tensor self_W0;                 // d_in x d_out
};

// Every trainable tensor of the model. Inverse relations own their rows in
// rel_feats / coeffs / distmult_diag; the decoder only ever reads the
// original relations' diagonal rows.
struct ModelParams {
    ModelDims dims;
    Tensor rel_feats;      // K_aug x rel_feat_dim (attention only)
    std::vector<LayerParams> layers;
    Tensor distmult_diag;  // K_aug x decoder_dim

    static ModelParams init(const ModelDims& dims, Rng& rng) {
        dims.validate();
        ModelParams p;
        p.dims = dims;
        p.rel_feats = glorot(dims.n_relations_aug, dims.rel_feat_dim(), rng);
        for (int l = 0; l < dims.layers; ++l) {
            LayerParams lp;
            int d_in = dims.layer_in(l);
            int d_out = dims.layer_out(l);
            if (!dims.share_attn || l == 0) {
                lp.attn_W = glorot(d_in, d_out, rng);
                lp.attn_a = Tensor::zeros({3 * d_out});  // uniform attention at epoch 0
                if (dims.rel_feat_dim() != d_in) lp.attn_Wr = glorot(dims.rel_feat_dim(), d_out, rng);
            }
            for (int b = 0; b < dims.bases; ++b) lp.bases.push_back(glorot(d_in, d_out, rng));
            lp.coeffs = glorot(dims.n_relations_aug, dims.bases, rng);
            lp.self_W0 = glorot(d_in, d_out, rng);
            p.layers.push_back(std::move(lp));
        }
        // ones scaled by 1/sqrt(d): scores start O(1)
        int dd = dims.decoder_dim();
        p.distmult_diag = Tensor::zeros({dims.n_relations_aug, dd});
        double s = 1.0 / std::sqrt(static_cast<double>(dd));
        for (std::int64_t i = 0; i < p.distmult_diag.numel(); ++i) p.distmult_diag[i] = s;
        return p;
    }

    // Attention params for layer l, honoring share_attn.
    const LayerParams& attn_source(int l) const { return dims.share_attn ? layers[0] : layers[l]; }

    // Stable documented parameter order: rel_feats, per-layer attention /
    // basis / self-loop tensors, distmult_diag. Checkpoint and gradient
    // vectors follow this order.
    std::vector<std::pair<std::string, Tensor*>> named() {
        std::vector<std::pair<std::string, Tensor*>> out;
        out.emplace_back("rel_feats", &rel_feats);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            std::string prefix = "layer" + std::to_string(l) + ".";
            LayerParams& lp = layers[l];
            if (lp.attn_W.numel() > 0) {
                out.emplace_back(prefix + "attn_W", &lp.attn_W);
                out.emplace_back(prefix + "attn_a", &lp.attn_a);
                if (lp.attn_Wr) out.emplace_back(prefix + "attn_Wr", &*lp.attn_Wr);
            }
            for (std::size_t b = 0; b < lp.bases.size(); ++b)
                out.emplace_back(prefix + "basis" + std::to_string(b), &lp.bases[b]);
            out.emplace_back(prefix + "coeffs", &lp.coeffs);
            out.emplace_back(prefix + "self_W0", &lp.self_W0);
        }
        out.emplace_back("distmult_diag", &distmult_diag);
        return out;
    }

    std::vector<std::pair<std::string, const Tensor*>> named() const {
        auto mut = const_cast<ModelParams*>(this)->named();
        std::vector<std::pair<std::string, const Tensor*>> out;
        out.reserve(mut.size());
        for (auto& [n, t] : mut) out.emplace_back(n, t);
        return out;
    }

    static Tensor glorot(int fan_in, int fan_out, Rng& rng) {
        double limit = std::sqrt(6.0 / (static_cast<double>(fan_in) + static_cast<double>(fan_out)));
        Tensor t = Tensor::zeros({fan_in, fan_out});
        for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
        return t;
    }
};

}  // namespace relatt
