#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>

#include "relatt/kg/graph.hpp"
#include "relatt/num/rng.hpp"

namespace relatt {

// Random KG with the requested counts: entities e0..e{N-1}, relations
// r0..r{K-1}, n_triples distinct uniform triples (no self-loops). Used by the
// toy fixtures and the synth tool.
inline KnowledgeGraph make_random_kg(int n_entities, int n_relations, int n_triples,
                                     std::uint64_t seed) {
    if (n_entities < 2 || n_relations < 1 || n_triples < 1)
        throw ConfigError("make_random_kg: need >= 2 entities, >= 1 relation, >= 1 triple");
    KnowledgeGraph g;
    for (int i = 0; i < n_entities; ++i) g.entities.add("e" + std::to_string(i));
    for (int r = 0; r < n_relations; ++r) g.relations.add("r" + std::to_string(r));
    Rng rng = Rng::stream(seed, RngStream::Synth);
    std::unordered_set<std::int64_t> seen;
    int guard = 0;
    while (static_cast<int>(g.triples.size()) < n_triples) {
        if (++guard > 1000 * n_triples)
            throw ConfigError("make_random_kg: triple count too dense for the entity count");
        int h = rng.below_int(n_entities);
        int t = rng.below_int(n_entities);
        if (h == t) continue;
        int r = rng.below_int(n_relations);
        Triple tr{h, r, t};
        if (seen.insert(triple_key(tr)).second) g.triples.push_back(tr);
    }
    return g;
}

// Random bipartite KG: heads from the first half of the entities, tails from
// the second. A symmetric decoder scores (h, r, t) and (t, r, h) identically,
// so uniformly random graphs are unmemorizable for DistMult -- reversed
// training edges pollute the rankings as unfiltered equal-score candidates.
// Bipartite orientation removes those collisions, which makes this the
// fixture of choice for memorization tests.
inline KnowledgeGraph make_bipartite_kg(int n_entities, int n_relations, int n_triples,
                                        std::uint64_t seed) {
    if (n_entities < 2 || n_relations < 1 || n_triples < 1)
        throw ConfigError("make_bipartite_kg: need >= 2 entities, >= 1 relation, >= 1 triple");
    int half = n_entities / 2;
    long long capacity = static_cast<long long>(half) * (n_entities - half) * n_relations;
    if (n_triples > capacity)
        throw ConfigError("make_bipartite_kg: more triples than distinct bipartite pairs");
    KnowledgeGraph g;
    for (int i = 0; i < n_entities; ++i) g.entities.add("e" + std::to_string(i));
    for (int r = 0; r < n_relations; ++r) g.relations.add("r" + std::to_string(r));
    Rng rng = Rng::stream(seed, RngStream::Synth);
    std::unordered_set<std::int64_t> seen;
    while (static_cast<int>(g.triples.size()) < n_triples) {
        int h = rng.below_int(half);
        int t = half + rng.below_int(n_entities - half);
        int r = rng.below_int(n_relations);
        Triple tr{h, r, t};
        if (seen.insert(triple_key(tr)).second) g.triples.push_back(tr);
    }
    return g;
}

}  // namespace relatt
