#pragma once

#include <optional>
#include <span>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/features.hpp"
#include "relatt/kg/graph.hpp"
#include "relatt/model/params.hpp"
#include "relatt/num/rng.hpp"
#include "relatt/num/tape.hpp"

namespace relatt {

// The logit of Eq.-style relation-aware attention carries no nonlinearity by
// default; LeakyReLU(0.2) is available for ablation.
enum class AttnNonlinearity { None, LeakyRelu };

// Attention coefficients are recomputed at every layer from that layer's
// inputs (default), or computed once from the input features and reused.
enum class AttnScope { PerLayer, FirstLayer };

struct ForwardOptions {
    bool attention = true;
    AttnScope scope = AttnScope::PerLayer;
    AttnNonlinearity nonlinearity = AttnNonlinearity::None;
    double hidden_dropout = 0.0;     // on every non-final layer output
    double attention_dropout = 0.0;  // on alpha after normalization, not renormalized
    bool training = false;           // dropout only fires in training mode
};

// Per-edge attention coefficients aligned with the augmented graph's edge
// ordering, plus the per-head-node grouping they were normalized over.
struct AttentionMap {
    Tensor alpha;        // [n_edges]
    IndexGroups groups;  // entity -> incident edge ids
};

// ---- tape-level building blocks -------------------------------------------

// e_(h,r,t) = a^T [W h_h || W m_r || W h_t], assembled as three projected
// score vectors gathered per edge. attn_Wr projects the relation slot when
// the relation feature width differs from this layer's input width;
// otherwise the shared W is applied to all three slots.
inline ValueId attention_logits(Tape& tape, ValueId layer_input, ValueId rel_feats,
                                const AugmentedGraph& graph, ValueId attn_W, ValueId attn_a,
                                std::optional<ValueId> attn_Wr,
                                AttnNonlinearity nl = AttnNonlinearity::None) {
    const Tensor& w = tape.value(attn_W);
    int d_attn = w.cols();
    if (tape.value(attn_a).numel() != 3 * d_attn)
        throw ContractError("attention_logits: attn_a length must be 3 * d_attn");
    if (tape.value(layer_input).cols() != w.rows())
        throw ContractError("attention_logits: input width does not match attn_W");
    ValueId rel_proj = attn_Wr ? *attn_Wr : attn_W;
    if (tape.value(rel_feats).cols() != tape.value(rel_proj).rows())
        throw ContractError("attention_logits: relation feature width does not match projection");

    ValueId hw = tape.matmul(layer_input, attn_W);  // N x d_attn
    ValueId mw = tape.matmul(rel_feats, rel_proj);  // K x d_attn
    ValueId a_head = tape.slice(attn_a, 0, d_attn);
    ValueId a_rel = tape.slice(attn_a, d_attn, d_attn);
    ValueId a_tail = tape.slice(attn_a, 2 * d_attn, d_attn);
    ValueId s_head = tape.matmul(hw, a_head);  // [N]
    ValueId s_rel = tape.matmul(mw, a_rel);    // [K]
    ValueId s_tail = tape.matmul(hw, a_tail);  // [N]

    ValueId e = tape.add(tape.add(tape.gather_elems(s_head, graph.heads),
                                  tape.gather_elems(s_rel, graph.rels)),
                         tape.gather_elems(s_tail, graph.tails));
    if (nl == AttnNonlinearity::LeakyRelu) e = tape.leaky_relu(e, 0.2);
    return e;
}

// Softmax within each head node's full incident-edge group, across all
// relations. Nodes without incident edges contribute an empty group.
inline ValueId attention_normalize(Tape& tape, ValueId logits, const AugmentedGraph& graph) {
    if (tape.value(logits).numel() != graph.n_edges())
        throw ContractError("attention_normalize: one logit per edge required");
    return tape.group_softmax(logits, graph.head_groups);
}

// W_r = sum_b coeffs[r][b] * V_b for every relation row.
inline std::vector<ValueId> basis_expand(Tape& tape, std::span<const ValueId> bases,
                                         ValueId coeffs) {
    int n_rel = tape.value(coeffs).rows();
    std::vector<ValueId> rel_w;
    rel_w.reserve(static_cast<std::size_t>(n_rel));
    for (int r = 0; r < n_rel; ++r) rel_w.push_back(tape.basis_combine(bases, coeffs, r));
    return rel_w;
}

// One propagation layer:
//   out[h] = act( sum_r sum_{t in N_h^r} alpha_(h,r,t) * (1/|N_h^r|) * W_r h_t
//                 + W_0 h_h )
// alpha carries the normalized attention (pass nullopt to run with alpha = 1,
// the attention-disabled update). The self-loop term is never attention
// weighted; per-edge weights always include the 1/|N_h^r| factor.
inline ValueId propagate_layer(Tape& tape, ValueId h_in, std::optional<ValueId> alpha,
                               const AugmentedGraph& graph, std::span<const ValueId> rel_w,
                               std::optional<ValueId> self_w0, bool apply_relu) {
    if (static_cast<int>(rel_w.size()) != graph.n_relations)
        throw ContractError("propagate_layer: one W_r per relation required");
    int n = graph.n_entities();
    if (tape.value(h_in).rows() != n)
        throw ContractError("propagate_layer: input must have one row per entity");
    if (alpha && tape.value(*alpha).numel() != graph.n_edges())
        throw ContractError("propagate_layer: alpha must align with the edge list");

    int d_out = tape.value(rel_w[0]).cols();
    ValueId acc = self_w0 && graph.self_loop
                      ? tape.matmul(h_in, *self_w0)
                      : tape.constant(Tensor::zeros({n, d_out}), "zero_acc");

    for (int r = 0; r < graph.n_relations; ++r) {
        int begin = graph.edges_begin(r);
        int end = graph.edges_end(r);
        if (begin == end) continue;
        int len = end - begin;
        std::vector<int> tails(graph.tails.begin() + begin, graph.tails.begin() + end);
        std::vector<int> heads(graph.heads.begin() + begin, graph.heads.begin() + end);
        std::vector<double> norm(graph.inv_rel_degree.begin() + begin,
                                 graph.inv_rel_degree.begin() + end);

        ValueId msgs = tape.matmul(tape.gather_rows(h_in, std::move(tails)), rel_w[r]);
        ValueId inv_deg = tape.constant(Tensor::vector(std::move(norm)), "edge_norm");
        ValueId weights = alpha ? tape.mul(tape.slice(*alpha, begin, len), inv_deg) : inv_deg;
        acc = tape.add(acc, tape.scatter_rows(n, tape.scale_rows(msgs, weights), std::move(heads)));
    }
    return apply_relu ? tape.relu(acc) : acc;
}

// ---- whole-model forward ---------------------------------------------------

// Tape ids of every registered parameter, in ModelParams::named() order, plus
// the feature node (a parameter in trainable mode, a constant otherwise).
struct RegisteredModel {
    ValueId rel_feats;
    struct Layer {
        ValueId attn_W, attn_a;
        std::optional<ValueId> attn_Wr;
        std::vector<ValueId> bases;
        ValueId coeffs, self_W0;
    };
    std::vector<Layer> layers;
    ValueId distmult_diag;
    ValueId features;
    bool features_trainable = false;
    std::vector<ValueId> flat;  // named() order; features appended when trainable
};

inline RegisteredModel register_model(Tape& tape, const ModelParams& params,
                                      const FeatureSource& features) {
    RegisteredModel reg;
    reg.rel_feats = tape.param(params.rel_feats);
    reg.flat.push_back(reg.rel_feats);
    for (const LayerParams& lp : params.layers) {
        RegisteredModel::Layer layer;
        if (lp.attn_W.numel() > 0) {
            layer.attn_W = tape.param(lp.attn_W);
            layer.attn_a = tape.param(lp.attn_a);
            reg.flat.push_back(layer.attn_W);
            reg.flat.push_back(layer.attn_a);
            if (lp.attn_Wr) {
                layer.attn_Wr = tape.param(*lp.attn_Wr);
                reg.flat.push_back(*layer.attn_Wr);
            }
        }
        for (const Tensor& b : lp.bases) {
            layer.bases.push_back(tape.param(b));
            reg.flat.push_back(layer.bases.back());
        }
        layer.coeffs = tape.param(lp.coeffs);
        layer.self_W0 = tape.param(lp.self_W0);
        reg.flat.push_back(layer.coeffs);
        reg.flat.push_back(layer.self_W0);
        reg.layers.push_back(std::move(layer));
    }
    reg.distmult_diag = tape.param(params.distmult_diag);
    reg.flat.push_back(reg.distmult_diag);
    reg.features_trainable = features.trainable();
    reg.features = reg.features_trainable ? tape.param(features.values())
                                          : tape.constant(features.values(), "features");
    if (reg.features_trainable) reg.flat.push_back(reg.features);
    return reg;
}

struct ForwardTrace {
    ValueId embeddings;                 // N x decoder_dim
    std::vector<ValueId> alphas;        // per layer (empty when attention off)
    std::vector<ValueId> layer_outputs; // h^(1) .. h^(L)
    std::vector<Tensor> hidden_masks;   // dropout masks actually applied
    std::vector<Tensor> attn_masks;
};

namespace detail {

// Inverted-dropout mask: 0 with probability p, 1/(1-p) otherwise.
inline Tensor dropout_mask(const std::vector<int>& shape, double p, Rng& rng) {
    Tensor m = Tensor::zeros(shape);
    double keep_scale = 1.0 / (1.0 - p);
    for (std::int64_t i = 0; i < m.numel(); ++i) m[i] = rng.uniform() < p ? 0.0 : keep_scale;
    return m;
}

}  // namespace detail

// L layers applied in sequence; hidden layers use ReLU, the final layer is
// linear. With attention off every message keeps weight 1 (times the degree
// normalization), which is the plain relational-GCN update. L = 0 passes the
// features through untouched.
inline ForwardTrace model_forward_on_tape(Tape& tape, const AugmentedGraph& graph,
                                          const ModelParams& params, const RegisteredModel& reg,
                                          const ForwardOptions& opt, Rng* dropout_rng = nullptr) {
    if (opt.training && (opt.hidden_dropout > 0.0 || opt.attention_dropout > 0.0) && !dropout_rng)
        throw ContractError("model_forward: dropout requested without an rng");
    int n_layers = static_cast<int>(params.layers.size());
    ForwardTrace trace;
    ValueId h = reg.features;

    std::optional<ValueId> first_layer_alpha;
    for (int l = 0; l < n_layers; ++l) {
        const RegisteredModel::Layer& reg_attn =
            params.dims.share_attn ? reg.layers[0] : reg.layers[l];
        const RegisteredModel::Layer& reg_layer = reg.layers[l];

        std::optional<ValueId> alpha;
        if (opt.attention) {
            if (opt.scope == AttnScope::FirstLayer && first_layer_alpha) {
                alpha = first_layer_alpha;
            } else {
                ValueId logits = attention_logits(tape, h, reg.rel_feats, graph, reg_attn.attn_W,
                                                  reg_attn.attn_a, reg_attn.attn_Wr,
                                                  opt.nonlinearity);
                alpha = attention_normalize(tape, logits, graph);
                if (opt.scope == AttnScope::FirstLayer) first_layer_alpha = alpha;
            }
            if (opt.training && opt.attention_dropout > 0.0) {
                Tensor mask = detail::dropout_mask({graph.n_edges()}, opt.attention_dropout,
                                                   *dropout_rng);
                trace.attn_masks.push_back(mask);
                alpha = tape.mul(*alpha, tape.constant(std::move(mask), "attn_dropout"));
            }
            trace.alphas.push_back(*alpha);
        }

        std::vector<ValueId> rel_w = basis_expand(tape, reg_layer.bases, reg_layer.coeffs);
        bool hidden = l + 1 < n_layers;
        h = propagate_layer(tape, h, alpha, graph, rel_w, reg_layer.self_W0, hidden);
        if (hidden && opt.training && opt.hidden_dropout > 0.0) {
            Tensor mask = detail::dropout_mask(tape.value(h).shape(), opt.hidden_dropout,
                                               *dropout_rng);
            trace.hidden_masks.push_back(mask);
            h = tape.mul(h, tape.constant(std::move(mask), "hidden_dropout"));
        }
        trace.layer_outputs.push_back(h);
    }
    trace.embeddings = h;
    return trace;
}

// Convenience wrapper: one-off forward on a private tape, returning plain
// tensors. Used everywhere gradients are not needed (evaluation, inference).
struct ForwardOutput {
    Tensor embeddings;
    std::vector<AttentionMap> attention;  // per layer, when attention is on
    std::vector<Tensor> layer_outputs;
};

inline ForwardOutput model_forward(const AugmentedGraph& graph, const FeatureSource& features,
                                   const ModelParams& params, const ForwardOptions& opt,
                                   Rng* dropout_rng = nullptr) {
    Tape tape;
    RegisteredModel reg = register_model(tape, params, features);
    ForwardTrace trace = model_forward_on_tape(tape, graph, params, reg, opt, dropout_rng);
    ForwardOutput out;
    out.embeddings = tape.value(trace.embeddings);
    for (ValueId a : trace.alphas)
        out.attention.push_back(AttentionMap{tape.value(a), graph.head_groups});
    for (ValueId h : trace.layer_outputs) out.layer_outputs.push_back(tape.value(h));
    return out;
}

}  // namespace relatt
