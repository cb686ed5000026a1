#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/vocab.hpp"
#include "relatt/num/index_groups.hpp"
#include "relatt/num/rng.hpp"

namespace relatt {

struct Triple {
    int head = 0;
    int rel = 0;
    int tail = 0;
    auto operator<=>(const Triple&) const = default;
};

// 56-bit packed key; enough for graphs far beyond desk scale.
inline std::int64_t triple_key(int h, int r, int t) {
    return (static_cast<std::int64_t>(h) << 40) | (static_cast<std::int64_t>(r) << 24) |
           static_cast<std::int64_t>(t);
}
inline std::int64_t triple_key(const Triple& tr) { return triple_key(tr.head, tr.rel, tr.tail); }

struct KnowledgeGraph {
    Vocab entities;
    Vocab relations;
    std::vector<Triple> triples;
    int duplicates_dropped = 0;  // exact duplicates removed at ingestion

    int n_entities() const { return entities.size(); }
    int n_relations() const { return relations.size(); }

    void check_indices() const {
        for (const Triple& t : triples)
            if (t.head < 0 || t.head >= n_entities() || t.tail < 0 || t.tail >= n_entities() ||
                t.rel < 0 || t.rel >= n_relations())
                throw ContractError("knowledge graph: triple index out of range");
    }
};

// Train/valid/test lists over one shared vocabulary. graph.triples is the
// union of the three splits.
struct DatasetSplit {
    KnowledgeGraph graph;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
};

// Relation names carrying this suffix are produced by augment(); re-ingesting
// an augmented dump and augmenting again is rejected instead of doubling up.
inline constexpr const char* kInverseSuffix = "#inv";

// Per-relation edge lists plus the derived structures the propagation layer
// needs: a flat deterministic edge ordering (grouped by relation), per-head
// incident-edge groups for the attention softmax, and 1/|N_h^r| per edge.
struct AugmentedGraph {
    KnowledgeGraph base;
    int n_relations = 0;  // K, or 2K with inverse edges
    bool inverse = false;
    bool self_loop = true;

    std::vector<int> heads, rels, tails;   // flat edge arrays, grouped by relation
    std::vector<int> rel_offsets;          // size n_relations + 1
    IndexGroups head_groups;               // entity -> incident edge ids (head side)
    std::vector<double> inv_rel_degree;    // per edge: 1 / |N_{head}^{rel}|

    int n_edges() const { return static_cast<int>(heads.size()); }
    int n_entities() const { return base.n_entities(); }

    int edges_begin(int r) const { return rel_offsets[r]; }
    int edges_end(int r) const { return rel_offsets[r + 1]; }
};

inline AugmentedGraph augment(const KnowledgeGraph& g, bool add_inverse, bool add_self_loop) {
    for (const std::string& name : g.relations.names())
        if (name.size() >= 4 && name.ends_with(kInverseSuffix))
            throw ContractError("augment: graph already contains inverse relations ('" + name +
                                "'); augmenting twice is not allowed");
    g.check_indices();

    AugmentedGraph ag;
    ag.base = g;
    ag.inverse = add_inverse;
    ag.self_loop = add_self_loop;
    int k = g.n_relations();
    ag.n_relations = add_inverse ? 2 * k : k;

    // bucket base edges per relation, preserving triple order
    std::vector<std::vector<std::pair<int, int>>> per_rel(ag.n_relations);
    for (const Triple& t : g.triples) per_rel[t.rel].emplace_back(t.head, t.tail);
    if (add_inverse)
        for (const Triple& t : g.triples) per_rel[t.rel + k].emplace_back(t.tail, t.head);

    ag.rel_offsets.assign(ag.n_relations + 1, 0);
    for (int r = 0; r < ag.n_relations; ++r)
        ag.rel_offsets[r + 1] = ag.rel_offsets[r] + static_cast<int>(per_rel[r].size());
    int n_edges = ag.rel_offsets.back();
    ag.heads.reserve(n_edges);
    ag.rels.reserve(n_edges);
    ag.tails.reserve(n_edges);
    for (int r = 0; r < ag.n_relations; ++r)
        for (auto [h, t] : per_rel[r]) {
            ag.heads.push_back(h);
            ag.rels.push_back(r);
            ag.tails.push_back(t);
        }

    ag.head_groups = IndexGroups::from_assignment(ag.heads, g.n_entities());

    // |N_h^r| per (head, relation); multiset edges count individually
    std::vector<int> count(n_edges, 0);
    {
        std::unordered_map<std::int64_t, int> deg;
        deg.reserve(n_edges);
        for (int e = 0; e < n_edges; ++e)
            deg[(static_cast<std::int64_t>(ag.heads[e]) << 24) | ag.rels[e]]++;
        ag.inv_rel_degree.resize(n_edges);
        for (int e = 0; e < n_edges; ++e)
            ag.inv_rel_degree[e] =
                1.0 / deg[(static_cast<std::int64_t>(ag.heads[e]) << 24) | ag.rels[e]];
    }
    return ag;
}

// Seeded uniform-random split into train/valid/test by fraction. Fractions
// must sum to at most 1; the remainder after train and valid goes to test.
inline DatasetSplit random_split(const KnowledgeGraph& g, double train_frac, double valid_frac,
                                 std::uint64_t seed) {
    if (train_frac < 0 || valid_frac < 0 || train_frac + valid_frac > 1.0)
        throw ConfigError("random_split: invalid fractions");
    std::vector<int> order(g.triples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng = Rng::stream(seed, RngStream::Sampling);
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
        std::swap(order[i], order[rng.below_int(i + 1)]);

    DatasetSplit split;
    split.graph = g;
    auto n = static_cast<std::int64_t>(g.triples.size());
    auto n_train = static_cast<std::int64_t>(train_frac * static_cast<double>(n));
    auto n_valid = static_cast<std::int64_t>(valid_frac * static_cast<double>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const Triple& t = g.triples[order[i]];
        if (i < n_train)
            split.train.push_back(t);
        else if (i < n_train + n_valid)
            split.valid.push_back(t);
        else
            split.test.push_back(t);
    }
    return split;
}

}  // namespace relatt
