#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relatt/error.hpp"

namespace relatt {

// Bijection between external string ids and dense indices [0, size()),
// assigned in first-appearance order.
class Vocab {
public:
    int add(std::string_view name) {
        auto it = index_.find(std::string(name));
        if (it != index_.end()) return it->second;
        int idx = static_cast<int>(names_.size());
        names_.emplace_back(name);
        index_.emplace(names_.back(), idx);
        return idx;
    }

    std::optional<int> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    int at(std::string_view name) const {
        auto idx = find(name);
        if (!idx) throw VocabError("unknown id '" + std::string(name) + "'");
        return *idx;
    }

    const std::string& name(int idx) const {
        if (idx < 0 || idx >= size()) throw VocabError("vocab index out of range");
        return names_[idx];
    }

    int size() const { return static_cast<int>(names_.size()); }

    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace relatt
