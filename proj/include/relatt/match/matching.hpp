#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/match/query.hpp"
#include "relatt/model/forward.hpp"
#include "relatt/num/rng.hpp"
#include "relatt/train/model_io.hpp"

namespace relatt {

// Keeps ceil(th * degree) uniformly sampled edges incident to the matching
// entity, then drops everything no longer connected to it. Edges between
// other nodes survive as long as they stay attached through retained
// structure. th = 1 is the identity. Deterministic under the rng.
inline QueryGraph sample_query_neighbors(const QueryGraph& q, double th, Rng& rng) {
    if (th <= 0.0 || th > 1.0) throw ConfigError("sample_query_neighbors: th must be in (0, 1]");
    if (th == 1.0) return q;

    int m = q.matching_entity;
    const auto& triples = q.graph.triples;
    std::vector<int> incident;
    for (std::size_t i = 0; i < triples.size(); ++i)
        if (triples[i].head == m || triples[i].tail == m) incident.push_back(static_cast<int>(i));

    std::vector<bool> keep(triples.size(), true);
    if (!incident.empty()) {
        int degree = static_cast<int>(incident.size());
        int retain = static_cast<int>(std::ceil(th * degree));
        // partial Fisher-Yates, then restore original edge order
        for (int i = 0; i < retain; ++i) {
            int j = i + rng.below_int(degree - i);
            std::swap(incident[i], incident[j]);
        }
        std::sort(incident.begin() + retain, incident.end());
        for (int i = retain; i < degree; ++i) keep[incident[i]] = false;
    }

    // connected component of the matching entity over kept edges (undirected)
    std::vector<std::vector<int>> adj(q.graph.n_entities());
    for (std::size_t i = 0; i < triples.size(); ++i)
        if (keep[i]) {
            adj[triples[i].head].push_back(triples[i].tail);
            adj[triples[i].tail].push_back(triples[i].head);
        }
    std::vector<bool> in_comp(q.graph.n_entities(), false);
    std::queue<int> frontier;
    in_comp[m] = true;
    frontier.push(m);
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop();
        for (int u : adj[v])
            if (!in_comp[u]) {
                in_comp[u] = true;
                frontier.push(u);
            }
    }

    QueryGraph out;
    out.graph.relations = q.graph.relations;  // full relation space preserved
    out.ground_truth = q.ground_truth;
    std::vector<int> remap(q.graph.n_entities(), -1);
    auto local = [&](int v) {
        if (remap[v] < 0) remap[v] = out.graph.entities.add(q.graph.entities.name(v));
        return remap[v];
    };
    local(m);  // matching entity first, even when isolated
    for (std::size_t i = 0; i < triples.size(); ++i)
        if (keep[i] && in_comp[triples[i].head])
            out.graph.triples.push_back(
                Triple{local(triples[i].head), triples[i].rel, local(triples[i].tail)});
    out.matching_entity = remap[m];

    out.features = Tensor::zeros({out.graph.n_entities(), q.features.cols()});
    for (int v = 0; v < q.graph.n_entities(); ++v)
        if (remap[v] >= 0)
            for (int j = 0; j < q.features.cols(); ++j)
                out.features.at(remap[v], j) = q.features.at(v, j);
    return out;
}

// Inductive inference: run the trained layers on the query structure with
// dropout off and attention recomputed on the query graph. Requires a model
// trained on file-backed features; a trainable embedding table cannot embed
// unseen entities.
inline Tensor infer_embeddings(const QueryGraph& q, const TrainedModel& model) {
    if (!model.inductive())
        throw ModeError("infer_embeddings: model was trained with a learned embedding table "
                        "and is not inductive");
    if (q.features.cols() != model.features.dim())
        throw ContractError("infer_embeddings: query feature width " +
                            std::to_string(q.features.cols()) + " does not match training width " +
                            std::to_string(model.features.dim()));

    // rebuild the query over the full training relation space
    KnowledgeGraph local;
    local.entities = q.graph.entities;
    for (const std::string& name : model.relations.names()) local.relations.add(name);
    for (const Triple& t : q.graph.triples) {
        const std::string& rel_name = q.graph.relations.name(t.rel);
        auto rel = model.relations.find(rel_name);
        if (!rel)
            throw VocabError("infer_embeddings: relation '" + rel_name +
                             "' is not in the trained vocabulary");
        local.triples.push_back(Triple{t.head, *rel, t.tail});
    }

    AugmentedGraph graph =
        augment(local, model.config.add_inverse, model.config.add_self_loop);
    FeatureSource features(FeatureSource::Mode::FileBacked, q.features);
    ForwardOutput out =
        model_forward(graph, features, model.params, model.config.forward_options(false));
    return out.embeddings;
}

struct MatchCandidate {
    int entity = 0;
    double score = 0.0;
};

namespace detail {

inline double cosine(std::span<const double> a, std::span<const double> b, double norm_a) {
    double dot = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        nb += b[i] * b[i];
    }
    if (nb == 0.0) return 0.0;  // zero-norm reference rows never match
    return dot / (norm_a * std::sqrt(nb));
}

}  // namespace detail

// Top-K reference entities by cosine similarity, ties broken by entity index.
inline std::vector<MatchCandidate> match_entities(std::span<const double> query_emb,
                                                  const Tensor& reference_embs, int k) {
    if (k < 1) throw ConfigError("match_entities: k must be >= 1");
    if (static_cast<int>(query_emb.size()) != reference_embs.cols())
        throw ContractError("match_entities: embedding width mismatch");
    double norm_q = 0.0;
    for (double v : query_emb) norm_q += v * v;
    if (norm_q == 0.0) throw SimilarityError("match_entities: zero-norm query embedding");
    norm_q = std::sqrt(norm_q);

    int n = reference_embs.rows();
    std::vector<MatchCandidate> all(static_cast<std::size_t>(n));
    for (int e = 0; e < n; ++e)
        all[static_cast<std::size_t>(e)] =
            MatchCandidate{e, detail::cosine(query_emb, reference_embs.row(e), norm_q)};
    auto by_score = [](const MatchCandidate& a, const MatchCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entity < b.entity;
    };
    int keep = std::min(k, n);
    std::partial_sort(all.begin(), all.begin() + keep, all.end(), by_score);
    all.resize(static_cast<std::size_t>(keep));
    return all;
}

struct QueryMatch {
    std::string ground_truth;
    int rank = 0;  // 1-based position of the ground truth in the full ranking
    std::vector<MatchCandidate> candidates;
};

struct MatchReport {
    std::map<int, double> hits;  // K -> fraction of queries with rank <= K
    std::vector<QueryMatch> queries;
};

inline const std::array<int, 4> kDefaultMatchHitsAt = {1, 5, 10, 30};

// Full pipeline per query: neighbor sampling at threshold th, inductive
// inference, cosine retrieval against the cached reference embeddings.
// Reference embeddings and model state are read-only throughout. Each query
// gets its own rng lane, so per-query work is order-independent.
inline MatchReport evaluate_matching(std::span<const QueryGraph> queries,
                                     const TrainedModel& model, const Tensor& reference_embs,
                                     double th, std::uint64_t seed,
                                     std::span<const int> hits_at = kDefaultMatchHitsAt,
                                     bool features_only = false) {
    if (queries.empty()) throw ContractError("evaluate_matching: no queries");
    const Tensor& refs = features_only ? model.features.values() : reference_embs;

    MatchReport report;
    std::map<int, int> counts;
    for (int k : hits_at) counts[k] = 0;
    int max_k = *std::max_element(hits_at.begin(), hits_at.end());

    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const QueryGraph& q = queries[qi];
        auto gt = model.entities.find(q.ground_truth);
        if (!gt)
            throw VocabError("evaluate_matching: ground truth '" + q.ground_truth +
                             "' is not a reference entity");
        Rng rng = Rng::stream(seed, RngStream::Sampling, qi);
        QueryGraph sampled = sample_query_neighbors(q, th, rng);

        std::vector<double> qvec;
        if (features_only) {
            auto row = sampled.features.row(sampled.matching_entity);
            qvec.assign(row.begin(), row.end());
        } else {
            Tensor emb = infer_embeddings(sampled, model);
            auto row = emb.row(sampled.matching_entity);
            qvec.assign(row.begin(), row.end());
        }

        QueryMatch qm;
        qm.ground_truth = q.ground_truth;
        qm.candidates = match_entities(qvec, refs, max_k);

        // full-scan rank of the ground truth under the same tie order
        double norm_q = 0.0;
        for (double v : qvec) norm_q += v * v;
        norm_q = std::sqrt(norm_q);
        double gt_score = detail::cosine(qvec, refs.row(*gt), norm_q);
        int rank = 1;
        for (int e = 0; e < refs.rows(); ++e) {
            if (e == *gt) continue;
            double s = detail::cosine(qvec, refs.row(e), norm_q);
            if (s > gt_score || (s == gt_score && e < *gt)) ++rank;
        }
        qm.rank = rank;
        for (int k : hits_at)
            if (rank <= k) counts[k]++;
        report.queries.push_back(std::move(qm));
    }
    for (int k : hits_at)
        report.hits[k] = static_cast<double>(counts[k]) / static_cast<double>(queries.size());
    return report;
}

// Embeddings of the full reference graph under the trained model; computed
// once and cached by callers.
inline Tensor reference_embeddings(const TrainedModel& model, const KnowledgeGraph& reference) {
    AugmentedGraph graph =
        augment(reference, model.config.add_inverse, model.config.add_self_loop);
    ForwardOutput out = model_forward(graph, model.features, model.params,
                                      model.config.forward_options(false));
    return out.embeddings;
}

}  // namespace relatt
