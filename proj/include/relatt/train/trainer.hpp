#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/features.hpp"
#include "relatt/kg/graph.hpp"
#include "relatt/kg/negatives.hpp"
#include "relatt/model/decoder.hpp"
#include "relatt/model/forward.hpp"
#include "relatt/model/params.hpp"
#include "relatt/num/adam.hpp"
#include "relatt/train/config.hpp"
#include "relatt/train/ranking.hpp"

namespace relatt {

struct EpochStat {
    int epoch = 0;
    double loss = 0.0;
    std::optional<double> val_mrr;  // present on evaluation epochs
};

struct TrainResult {
    ModelParams params;        // best checkpoint by validation MRR
    FeatureSource features;    // trained table in table mode, else the input features
    std::vector<EpochStat> history;
    double best_val_mrr = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
    bool stopped_early = false;
};

// The flat trainable tensor list: every ModelParams entry in named() order,
// plus the embedding table when features are trainable. Gradient vectors from
// the tape align with this order by construction of register_model().
inline std::vector<std::pair<std::string, Tensor*>> trainable_tensors(ModelParams& params,
                                                                      FeatureSource& features) {
    auto named = params.named();
    if (features.trainable()) named.emplace_back("embedding", &features.mutable_values());
    return named;
}

// materialize a value snapshot (AdamState construction wants tensor values)
inline std::span<const Tensor> snapshot_of(const std::vector<Tensor*>& ptrs,
                                           std::vector<Tensor>& storage) {
    storage.clear();
    storage.reserve(ptrs.size());
    for (Tensor* t : ptrs) storage.push_back(*t);
    return storage;
}

// Full-batch training: negatives are resampled every epoch, one Adam step per
// epoch, filtered validation MRR every eval_interval epochs with the best
// checkpoint kept. Stops after `patience` evaluations without improvement or
// at max_epochs. With an empty validation split the MRR is measured on the
// training triples instead (useful for memorization fixtures).
inline TrainResult train(const DatasetSplit& split, FeatureSource features,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (split.train.empty()) throw ContractError("train: empty train split");
    if (features.n_entities() != split.graph.n_entities())
        throw ContractError("train: feature rows do not match entity count");

    AugmentedGraph graph = augment(split.graph, cfg.add_inverse, cfg.add_self_loop);

    ModelDims dims;
    dims.n_relations_aug = graph.n_relations;
    dims.feature_dim = features.dim();
    dims.hidden_dim = cfg.dim;
    dims.layers = cfg.layers;
    dims.bases = cfg.bases;
    dims.share_attn = cfg.attn_share;

    Rng init_rng = Rng::stream(cfg.seed, RngStream::Init);
    ModelParams params = ModelParams::init(dims, init_rng);

    Rng neg_rng = Rng::stream(cfg.seed, RngStream::Negatives);
    Rng dropout_rng = Rng::stream(cfg.seed, RngStream::Dropout);

    FilterIndex filter = FilterIndex::from_split(split);
    std::span<const Triple> eval_triples = split.valid.empty()
                                               ? std::span<const Triple>(split.train)
                                               : std::span<const Triple>(split.valid);

    auto tensors = trainable_tensors(params, features);
    std::vector<Tensor*> tensor_ptrs;
    std::vector<Tensor> snapshot;
    for (auto& [name, t] : tensors) tensor_ptrs.push_back(t);
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;
    AdamState adam(snapshot_of(tensor_ptrs, snapshot), adam_cfg);

    ForwardOptions train_opt = cfg.forward_options(true);
    ForwardOptions eval_opt = cfg.forward_options(false);

    TrainResult result{params, features, {}, 0.0, 0, 0, false};
    bool have_best = false;
    int evals_since_best = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        LabeledTripleBatch batch =
            sample_negatives(split.train, cfg.neg_ratio, split.graph, neg_rng,
                             cfg.filtered_negatives ? &filter.keys() : nullptr);

        double loss;
        std::vector<Tensor> grads;
        try {
            Tape tape;
            RegisteredModel reg = register_model(tape, params, features);
            ForwardTrace trace =
                model_forward_on_tape(tape, graph, params, reg, train_opt, &dropout_rng);
            ValueId scores = score_triples(tape, trace.embeddings, reg.distmult_diag, batch.triples);
            ValueId loss_id = bce_loss(tape, scores, batch.labels);
            loss = tape.backward(loss_id);
            grads.reserve(reg.flat.size());
            for (ValueId id : reg.flat) grads.push_back(tape.grad(id));
        } catch (const NumericError& e) {
            throw TrainingError("training diverged at epoch " + std::to_string(epoch) + ": " +
                                    e.what(),
                                epoch);
        }
        if (!std::isfinite(loss))
            throw TrainingError("training diverged at epoch " + std::to_string(epoch), epoch);

        adam.step(tensor_ptrs, grads);

        EpochStat stat{epoch, loss, std::nullopt};
        if (epoch % cfg.eval_interval == 0 || epoch == cfg.max_epochs) {
            ForwardOutput out = model_forward(graph, features, params, eval_opt);
            RankingReport report =
                evaluate_ranking(eval_triples, out.embeddings, params.distmult_diag, filter);
            stat.val_mrr = report.mrr;
            if (!have_best || report.mrr > result.best_val_mrr) {
                have_best = true;
                result.best_val_mrr = report.mrr;
                result.best_epoch = epoch;
                result.params = params;
                result.features = features;
                evals_since_best = 0;
            } else {
                ++evals_since_best;
            }
        }
        result.history.push_back(stat);
        result.epochs_run = epoch;
        if (stat.val_mrr && evals_since_best >= cfg.patience) {
            result.stopped_early = true;
            break;
        }
    }
    if (!have_best) {  // never evaluated: return the final state
        result.params = params;
        result.features = features;
    }
    return result;
}

}  // namespace relatt
