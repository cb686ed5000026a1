#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/features.hpp"
#include "relatt/kg/graph.hpp"
#include "relatt/kg/io.hpp"
#include "relatt/num/tensor.hpp"

namespace relatt {

// A small graph containing one entity to be matched against the reference
// graph. Relation names must exist in the trained model's vocabulary; entity
// ids are local to the query. A query may have no edges at all (isolated
// matching entity).
struct QueryGraph {
    KnowledgeGraph graph;
    Tensor features;            // one row per local entity
    int matching_entity = 0;    // local index
    std::string ground_truth;   // reference-graph entity id
};

// Directory layout: triples.tsv (may be empty), features.txt, meta.txt with
// lines `matching_entity=<id>` and `ground_truth=<reference id>`.
inline QueryGraph load_query_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::path meta_path = fs::path(dir) / "meta.txt";
    std::ifstream meta(meta_path);
    if (!meta) throw IoError("query dir '" + dir + "' has no meta.txt");
    std::string line, matching_id, ground_truth;
    int line_no = 0;
    while (std::getline(meta, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("'" + meta_path.string() + "' line " + std::to_string(line_no) +
                             ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (!value.empty() && value.back() == '\r') value.pop_back();
        if (key == "matching_entity") matching_id = value;
        else if (key == "ground_truth") ground_truth = value;
        else
            throw ParseError("'" + meta_path.string() + "' line " + std::to_string(line_no) +
                             ": unknown key '" + key + "'");
    }
    if (matching_id.empty()) throw ParseError("'" + meta_path.string() + "': missing matching_entity");
    if (ground_truth.empty()) throw ParseError("'" + meta_path.string() + "': missing ground_truth");

    QueryGraph q;
    fs::path triples = fs::path(dir) / "triples.tsv";
    if (!fs::exists(triples)) throw IoError("query dir '" + dir + "' has no triples.tsv");
    {
        std::unordered_map<std::int64_t, int> seen;
        detail::read_triple_file(triples.string(), q.graph, seen, 0);  // empty file is fine here
    }
    q.matching_entity = q.graph.entities.add(matching_id);
    q.ground_truth = ground_truth;

    fs::path feats = fs::path(dir) / "features.txt";
    if (!fs::exists(feats)) throw IoError("query dir '" + dir + "' has no features.txt");
    q.features = load_features(feats.string(), q.graph).values();
    return q;
}

inline void write_query_dir(const std::string& dir, const QueryGraph& q) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_triples((fs::path(dir) / "triples.tsv").string(), q.graph, q.graph.triples);
    write_features((fs::path(dir) / "features.txt").string(), q.graph, q.features);
    std::ofstream meta(fs::path(dir) / "meta.txt", std::ios::trunc);
    if (!meta) throw IoError("cannot write meta.txt in '" + dir + "'");
    meta << "matching_entity=" << q.graph.entities.name(q.matching_entity) << '\n'
         << "ground_truth=" << q.ground_truth << '\n';
}

// Query subdirectories of `dir`, sorted by name for a deterministic order.
inline std::vector<std::string> list_query_dirs(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("query root '" + dir + "' is not a directory");
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory()) out.push_back(entry.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace relatt
