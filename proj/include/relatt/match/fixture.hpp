#pragma once

#include <cstdint>
#include <queue>
#include <string>
#include <vector>

#include "relatt/kg/features.hpp"
#include "relatt/kg/synth.hpp"
#include "relatt/match/query.hpp"
#include "relatt/num/rng.hpp"

namespace relatt {

// Synthetic stand-in for a proprietary matching corpus: a random reference KG
// with attribute features, plus query graphs cut as receptive-field-complete
// ego networks around sampled entities. With `hops` equal to the trained
// layer count and zero noise, a query reproduces its center's reference
// embedding exactly.
struct MatchingFixtureSpec {
    int n_entities = 200;
    int n_relations = 4;
    int n_triples = 600;
    int feature_dim = 16;
    int n_queries = 40;
    int hops = 2;               // receptive-field depth to preserve; use the model's L
    int min_center_degree = 3;  // query centers need enough edges to sample from
    double feature_noise = 0.0; // sd of additive gaussian noise on query features
    std::uint64_t seed = 1;       // reference structure, features, query selection
    std::uint64_t noise_seed = 1; // query feature perturbation only
};

struct MatchingFixture {
    KnowledgeGraph reference;
    Tensor features;  // n_entities x feature_dim
    std::vector<QueryGraph> queries;
};

namespace detail {

// Ego network preserving the center's receptive field: every edge incident to
// a node within distance hops-1 is kept, so all hidden states feeding the
// center stay exact; nodes at distance hops contribute features only.
inline QueryGraph cut_ego_query(const KnowledgeGraph& reference, const Tensor& features,
                                int center, int hops) {
    int n = reference.n_entities();
    std::vector<int> dist(n, -1);
    dist[center] = 0;
    std::queue<int> frontier;
    frontier.push(center);
    std::vector<std::vector<int>> adj(n);
    for (const Triple& t : reference.triples) {
        adj[t.head].push_back(t.tail);
        adj[t.tail].push_back(t.head);
    }
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop();
        if (dist[v] >= hops) continue;
        for (int u : adj[v])
            if (dist[u] < 0) {
                dist[u] = dist[v] + 1;
                frontier.push(u);
            }
    }

    QueryGraph q;
    q.graph.relations = reference.relations;
    q.ground_truth = reference.entities.name(center);
    std::vector<int> remap(n, -1);
    auto local = [&](int v) {
        if (remap[v] < 0) remap[v] = q.graph.entities.add(reference.entities.name(v));
        return remap[v];
    };
    local(center);
    // reference triple order is preserved, keeping aggregation order identical
    for (const Triple& t : reference.triples) {
        bool head_inner = dist[t.head] >= 0 && dist[t.head] < hops;
        bool tail_inner = dist[t.tail] >= 0 && dist[t.tail] < hops;
        if (head_inner || tail_inner)
            q.graph.triples.push_back(Triple{local(t.head), t.rel, local(t.tail)});
    }
    q.matching_entity = remap[center];

    q.features = Tensor::zeros({q.graph.n_entities(), features.cols()});
    for (int v = 0; v < n; ++v)
        if (remap[v] >= 0)
            for (int j = 0; j < features.cols(); ++j)
                q.features.at(remap[v], j) = features.at(v, j);
    return q;
}

}  // namespace detail

inline MatchingFixture make_matching_fixture(const MatchingFixtureSpec& spec) {
    MatchingFixture fx;
    fx.reference = make_random_kg(spec.n_entities, spec.n_relations, spec.n_triples, spec.seed);

    Rng feat_rng = Rng::stream(spec.seed, RngStream::Synth, /*lane=*/1);
    fx.features = Tensor::zeros({spec.n_entities, spec.feature_dim});
    double scale = 1.0 / std::sqrt(static_cast<double>(spec.feature_dim));
    for (std::int64_t i = 0; i < fx.features.numel(); ++i)
        fx.features[i] = feat_rng.normal() * scale;

    // centers: entities with enough degree, a seeded distinct sample
    std::vector<int> degree(spec.n_entities, 0);
    for (const Triple& t : fx.reference.triples) {
        degree[t.head]++;
        degree[t.tail]++;
    }
    std::vector<int> eligible;
    for (int v = 0; v < spec.n_entities; ++v)
        if (degree[v] >= spec.min_center_degree) eligible.push_back(v);
    if (static_cast<int>(eligible.size()) < spec.n_queries)
        throw ConfigError("matching fixture: not enough high-degree entities for " +
                          std::to_string(spec.n_queries) + " queries");
    Rng pick_rng = Rng::stream(spec.seed, RngStream::Synth, /*lane=*/2);
    for (int i = 0; i < spec.n_queries; ++i) {
        int j = i + pick_rng.below_int(static_cast<int>(eligible.size()) - i);
        std::swap(eligible[static_cast<std::size_t>(i)], eligible[static_cast<std::size_t>(j)]);
    }
    eligible.resize(static_cast<std::size_t>(spec.n_queries));

    Rng noise_rng = Rng::stream(spec.noise_seed, RngStream::Synth, /*lane=*/3);
    for (int center : eligible) {
        QueryGraph q = detail::cut_ego_query(fx.reference, fx.features, center, spec.hops);
        if (spec.feature_noise > 0.0)
            for (std::int64_t i = 0; i < q.features.numel(); ++i)
                q.features[i] += noise_rng.normal() * spec.feature_noise;
        fx.queries.push_back(std::move(q));
    }
    return fx;
}

}  // namespace relatt
