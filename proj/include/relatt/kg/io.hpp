#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/graph.hpp"

namespace relatt {

namespace detail {

// Splits one triple line on tabs. Exactly three fields required.
inline bool split_triple_line(const std::string& line, std::string& h, std::string& r,
                              std::string& t) {
    auto first = line.find('\t');
    if (first == std::string::npos) return false;
    auto second = line.find('\t', first + 1);
    if (second == std::string::npos) return false;
    if (line.find('\t', second + 1) != std::string::npos) return false;
    h = line.substr(0, first);
    r = line.substr(first + 1, second - first - 1);
    t = line.substr(second + 1);
    if (!t.empty() && t.back() == '\r') t.pop_back();  // tolerate CRLF
    return !h.empty() && !r.empty() && !t.empty();
}

// Appends triples from one file into the graph. Duplicates within the file
// are dropped and counted; a triple already ingested from an earlier split
// file is a disjointness violation and a hard error.
inline std::vector<Triple> read_triple_file(const std::string& path, KnowledgeGraph& g,
                                            std::unordered_map<std::int64_t, int>& seen_in,
                                            int file_tag) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open triple file '" + path + "'");
    std::vector<Triple> out;
    std::string line, h, r, t;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (!split_triple_line(line, h, r, t))
            throw ParseError("'" + path + "' line " + std::to_string(line_no) +
                             ": expected head<TAB>relation<TAB>tail");
        Triple tr{g.entities.add(h), g.relations.add(r), g.entities.add(t)};
        auto [it, inserted] = seen_in.emplace(triple_key(tr), file_tag);
        if (inserted) {
            g.triples.push_back(tr);
            out.push_back(tr);
        } else if (it->second == file_tag) {
            g.duplicates_dropped++;
        } else {
            throw ContractError("'" + path + "' line " + std::to_string(line_no) +
                                ": triple already present in an earlier split file "
                                "(splits must be disjoint)");
        }
    }
    return out;
}

}  // namespace detail

// One TSV file -> a standalone graph. Vocabularies get dense indices in
// first-appearance order; exact duplicate triples are dropped and counted.
inline KnowledgeGraph load_triples(const std::string& path) {
    KnowledgeGraph g;
    std::unordered_map<std::int64_t, int> seen;
    detail::read_triple_file(path, g, seen, 0);
    if (g.triples.empty()) throw ParseError("'" + path + "': no triples (empty graph)");
    return g;
}

// Dataset directory with train.tsv (required) and valid.tsv / test.tsv
// (optional, treated as empty when absent). The three splits share one
// vocabulary built in train -> valid -> test order.
inline DatasetSplit load_dataset_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    DatasetSplit split;
    std::unordered_map<std::int64_t, int> seen;
    fs::path train = fs::path(dir) / "train.tsv";
    if (!fs::exists(train)) throw IoError("dataset dir '" + dir + "' has no train.tsv");
    split.train = detail::read_triple_file(train.string(), split.graph, seen, 0);
    if (split.train.empty()) throw ParseError("'" + train.string() + "': empty train split");

    fs::path valid = fs::path(dir) / "valid.tsv";
    if (fs::exists(valid))
        split.valid = detail::read_triple_file(valid.string(), split.graph, seen, 1);
    fs::path test = fs::path(dir) / "test.tsv";
    if (fs::exists(test))
        split.test = detail::read_triple_file(test.string(), split.graph, seen, 2);
    return split;
}

// Writes triples (external string ids) as TSV, one per line.
inline void write_triples(const std::string& path, const KnowledgeGraph& g,
                          std::span<const Triple> triples) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    for (const Triple& t : triples)
        os << g.entities.name(t.head) << '\t' << g.relations.name(t.rel) << '\t'
           << g.entities.name(t.tail) << '\n';
    if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace relatt
