#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <unordered_set>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/graph.hpp"
#include "relatt/model/decoder.hpp"
#include "relatt/num/tensor.hpp"

namespace relatt {

// Membership index over every known true triple (train u valid u test);
// filtered ranking removes these from the candidate pool.
class FilterIndex {
public:
    FilterIndex() = default;

    static FilterIndex from_split(const DatasetSplit& split) {
        FilterIndex f;
        f.add(split.train);
        f.add(split.valid);
        f.add(split.test);
        return f;
    }

    static FilterIndex from_triples(std::span<const Triple> triples) {
        FilterIndex f;
        f.add(triples);
        return f;
    }

    void add(std::span<const Triple> triples) {
        for (const Triple& t : triples) keys_.insert(triple_key(t));
    }

    bool contains(int h, int r, int t) const { return keys_.contains(triple_key(h, r, t)); }
    bool contains(const Triple& t) const { return keys_.contains(triple_key(t)); }
    std::size_t size() const { return keys_.size(); }
    const std::unordered_set<std::int64_t>& keys() const { return keys_; }

private:
    std::unordered_set<std::int64_t> keys_;
};

enum class CorruptionSide { Head, Tail };

// Rank of the test triple among all candidates obtained by replacing the
// chosen side with every entity. Known true candidates other than the test
// triple itself are removed when `filtered`. Ties are pessimistic: candidates
// scoring equal to the test triple count against it.
inline int rank_triple(const Triple& test, const Tensor& embeddings, const Tensor& diag,
                       const FilterIndex& filter, CorruptionSide side, bool filtered = true) {
    int n = embeddings.rows();
    int d = embeddings.cols();
    if (diag.cols() != d) throw ContractError("rank_triple: decoder width mismatch");
    int fixed = side == CorruptionSide::Tail ? test.head : test.tail;
    int moving = side == CorruptionSide::Tail ? test.tail : test.head;

    // DistMult is symmetric, so both corruption sides share this form; the
    // diag * (fixed * candidate) association matches distmult_score bitwise.
    auto score_of = [&](int e) {
        double s = 0.0;
        for (int j = 0; j < d; ++j)
            s += diag.at(test.rel, j) * (embeddings.at(fixed, j) * embeddings.at(e, j));
        return s;
    };

    double target = score_of(moving);
    int greater = 0, equal = 0;
    for (int e = 0; e < n; ++e) {
        if (e == moving) continue;
        if (filtered) {
            bool known = side == CorruptionSide::Tail ? filter.contains(test.head, test.rel, e)
                                                      : filter.contains(e, test.rel, test.tail);
            if (known) continue;
        }
        double s = score_of(e);
        if (s > target)
            ++greater;
        else if (s == target)
            ++equal;
    }
    return 1 + greater + equal;
}

// MRR and Hits@K over both corruption sides, with per-triple ranks kept so
// every aggregate can be recomputed from the report.
struct RankingReport {
    double mrr = 0.0;
    std::map<int, double> hits;                // K -> fraction of ranks <= K
    std::vector<std::array<int, 2>> ranks;     // per test triple: {head side, tail side}

    int rank_count() const { return 2 * static_cast<int>(ranks.size()); }

    static RankingReport from_ranks(std::vector<std::array<int, 2>> ranks,
                                    std::span<const int> hits_at) {
        RankingReport r;
        r.ranks = std::move(ranks);
        double sum = 0.0;
        std::map<int, int> counts;
        for (int k : hits_at) counts[k] = 0;
        for (const auto& pair : r.ranks)
            for (int rank : pair) {
                sum += 1.0 / static_cast<double>(rank);
                for (int k : hits_at)
                    if (rank <= k) counts[k]++;
            }
        double total = static_cast<double>(r.rank_count());
        r.mrr = total > 0 ? sum / total : 0.0;
        for (int k : hits_at) r.hits[k] = total > 0 ? counts[k] / total : 0.0;
        return r;
    }
};

inline const std::array<int, 3> kDefaultHitsAt = {1, 3, 10};

// Filtered link-prediction evaluation: each test triple is ranked against
// head-corrupted and tail-corrupted candidate sets and both ranks enter the
// aggregates.
inline RankingReport evaluate_ranking(std::span<const Triple> test, const Tensor& embeddings,
                                      const Tensor& diag, const FilterIndex& filter,
                                      std::span<const int> hits_at = kDefaultHitsAt,
                                      bool filtered = true) {
    if (test.empty()) throw ContractError("evaluate_ranking: empty test split");
    std::vector<std::array<int, 2>> ranks;
    ranks.reserve(test.size());
    for (const Triple& t : test)
        ranks.push_back({rank_triple(t, embeddings, diag, filter, CorruptionSide::Head, filtered),
                         rank_triple(t, embeddings, diag, filter, CorruptionSide::Tail, filtered)});
    return RankingReport::from_ranks(std::move(ranks), hits_at);
}

}  // namespace relatt
