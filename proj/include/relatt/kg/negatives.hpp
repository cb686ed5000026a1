#pragma once

#include <span>
#include <unordered_set>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/graph.hpp"
#include "relatt/num/rng.hpp"

namespace relatt {

struct LabeledTripleBatch {
    std::vector<Triple> triples;
    std::vector<double> labels;  // 1 positive, 0 negative

    std::size_t size() const { return triples.size(); }
};

// For each positive, emit the positive (y=1) followed by `ratio` corruptions
// (y=0). Each corruption replaces exactly one of head/tail -- side chosen
// uniformly -- with a uniformly random *different* entity; the relation is
// never corrupted. By default corruptions are not filtered against known true
// triples (a corruption may coincide with a real triple); pass a filter to
// enable filtered sampling.
inline LabeledTripleBatch sample_negatives(std::span<const Triple> positives, int ratio,
                                           const KnowledgeGraph& graph, Rng& rng,
                                           const std::unordered_set<std::int64_t>* filter = nullptr) {
    if (ratio < 1) throw ConfigError("sample_negatives: ratio must be >= 1");
    int n = graph.n_entities();
    if (n < 2) throw SamplingError("sample_negatives: need at least two entities to corrupt");

    LabeledTripleBatch batch;
    batch.triples.reserve(positives.size() * (1 + static_cast<std::size_t>(ratio)));
    batch.labels.reserve(batch.triples.capacity());
    for (const Triple& pos : positives) {
        batch.triples.push_back(pos);
        batch.labels.push_back(1.0);
        for (int k = 0; k < ratio; ++k) {
            Triple neg = pos;
            int attempts = 0;
            for (;;) {
                if (++attempts > 64 * n)
                    throw SamplingError("sample_negatives: cannot find a corruption that is "
                                        "not a known true triple");
                bool corrupt_head = rng.below(2) == 0;
                int replacement = rng.below_int(n);
                neg = pos;
                if (corrupt_head) {
                    if (replacement == pos.head) continue;
                    neg.head = replacement;
                } else {
                    if (replacement == pos.tail) continue;
                    neg.tail = replacement;
                }
                if (filter && filter->contains(triple_key(neg))) continue;
                break;
            }
            batch.triples.push_back(neg);
            batch.labels.push_back(0.0);
        }
    }
    return batch;
}

}  // namespace relatt
