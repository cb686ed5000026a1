#pragma once

#include <span>
#include <vector>

#include "relatt/error.hpp"

namespace relatt {

// CSR-style partition of [0, n) element ids into disjoint groups. Used for
// per-head-node softmax groups: group g holds the edge ids whose head is g.
// Empty groups are allowed.
struct IndexGroups {
    std::vector<int> offsets;  // size = count() + 1
    std::vector<int> members;  // element ids, grouped

    int count() const { return static_cast<int>(offsets.size()) - 1; }

    std::span<const int> group(int g) const {
        return std::span<const int>(members).subspan(offsets[g], offsets[g + 1] - offsets[g]);
    }

    // Build from a group assignment per element (group ids in [0, n_groups)).
    static IndexGroups from_assignment(std::span<const int> group_of, int n_groups) {
        IndexGroups ix;
        ix.offsets.assign(n_groups + 1, 0);
        for (int g : group_of) {
            if (g < 0 || g >= n_groups) throw ContractError("index groups: group id out of range");
            ix.offsets[g + 1]++;
        }
        for (int g = 0; g < n_groups; ++g) ix.offsets[g + 1] += ix.offsets[g];
        std::vector<int> cursor(ix.offsets.begin(), ix.offsets.end() - 1);
        ix.members.resize(group_of.size());
        for (int e = 0; e < static_cast<int>(group_of.size()); ++e)
            ix.members[cursor[group_of[e]]++] = e;
        return ix;
    }
};

}  // namespace relatt
