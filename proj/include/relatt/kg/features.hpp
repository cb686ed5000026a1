#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/graph.hpp"
#include "relatt/num/rng.hpp"
#include "relatt/num/tensor.hpp"

namespace relatt {

// Input features for every entity: either a file-backed table of fixed
// attribute vectors (never touched by training; enables inductive inference)
// or a trainable embedding table updated alongside the model weights.
class FeatureSource {
public:
    enum class Mode { FileBacked, Trainable };

    FeatureSource() = default;
    FeatureSource(Mode mode, Tensor values) : mode_(mode), values_(std::move(values)) {
        if (values_.ndim() != 2) throw ContractError("feature source: N x d matrix required");
        if (!values_.all_finite()) throw NumericError("feature source: non-finite feature value");
    }

    Mode mode() const { return mode_; }
    bool trainable() const { return mode_ == Mode::Trainable; }
    int dim() const { return values_.cols(); }
    int n_entities() const { return values_.rows(); }
    const Tensor& values() const { return values_; }
    Tensor& mutable_values() {
        if (!trainable()) throw ContractError("feature source: file-backed features are fixed");
        return values_;
    }
    void replace_values(Tensor t) {
        if (!t.same_shape(values_)) throw ContractError("feature source: shape change rejected");
        values_ = std::move(t);
    }

private:
    Mode mode_ = Mode::Trainable;
    Tensor values_;
};

// features.txt: first line "N d", then N lines "entity_id v_1 ... v_d".
// Values parse via strtod, so each decimal literal lands on the nearest
// double. Rows for entities outside the graph are ignored; every graph
// entity must be covered.
inline FeatureSource load_features(const std::string& path, const KnowledgeGraph& graph) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open feature file '" + path + "'");
    std::string line;
    if (!std::getline(is, line)) throw ParseError("'" + path + "': empty feature file");
    std::istringstream header(line);
    std::int64_t n_rows = 0;
    int dim = 0;
    if (!(header >> n_rows >> dim) || n_rows < 0 || dim <= 0)
        throw ParseError("'" + path + "' line 1: expected header 'N d'");

    int n = graph.n_entities();
    Tensor values = Tensor::zeros({n, dim});
    std::vector<bool> covered(static_cast<std::size_t>(n), false);
    int line_no = 1;
    for (std::int64_t row = 0; row < n_rows; ++row) {
        if (!std::getline(is, line))
            throw ParseError("'" + path + "': expected " + std::to_string(n_rows) +
                             " feature rows, file ended after " + std::to_string(row));
        ++line_no;
        std::istringstream ls(line);
        std::string id;
        if (!(ls >> id))
            throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": missing id");
        std::vector<double> vec;
        vec.reserve(static_cast<std::size_t>(dim));
        std::string tok;
        while (ls >> tok) {
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0')
                throw ParseError("'" + path + "' line " + std::to_string(line_no) +
                                 ": bad float '" + tok + "'");
            vec.push_back(v);
        }
        if (static_cast<int>(vec.size()) != dim)
            throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                             std::to_string(dim) + " values, got " + std::to_string(vec.size()));
        auto idx = graph.entities.find(id);
        if (!idx) continue;  // feature files may cover a superset of the graph
        for (int j = 0; j < dim; ++j) values.at(*idx, j) = vec[static_cast<std::size_t>(j)];
        covered[static_cast<std::size_t>(*idx)] = true;
    }

    std::string missing;
    int n_missing = 0;
    for (int i = 0; i < n; ++i)
        if (!covered[static_cast<std::size_t>(i)]) {
            if (n_missing < 5) missing += (n_missing ? ", " : "") + graph.entities.name(i);
            ++n_missing;
        }
    if (n_missing > 0)
        throw CoverageError("'" + path + "': " + std::to_string(n_missing) +
                            " entities have no feature row (" + missing +
                            (n_missing > 5 ? ", ..." : "") + ")");
    return FeatureSource(FeatureSource::Mode::FileBacked, std::move(values));
}

// Trainable N x dim table, Glorot-uniform over (fan_in=N, fan_out=dim):
// U(-limit, limit) with limit = sqrt(6 / (N + dim)). Identical seed, identical
// table.
inline FeatureSource init_random_features(const KnowledgeGraph& graph, int dim,
                                          std::uint64_t seed) {
    if (dim < 1) throw ConfigError("init_random_features: dim must be >= 1");
    int n = graph.n_entities();
    Tensor values = Tensor::zeros({n, dim});
    Rng rng = Rng::stream(seed, RngStream::Init, /*lane=*/0xFEA7);
    double limit = std::sqrt(6.0 / (static_cast<double>(n) + static_cast<double>(dim)));
    for (std::int64_t i = 0; i < values.numel(); ++i) values[i] = rng.uniform(-limit, limit);
    return FeatureSource(FeatureSource::Mode::Trainable, std::move(values));
}

// Round-trip safe: 17 significant digits reproduce each double exactly.
inline void write_features(const std::string& path, const KnowledgeGraph& graph,
                           const Tensor& values) {
    if (values.rows() != graph.n_entities())
        throw ContractError("write_features: one row per entity required");
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.precision(std::numeric_limits<double>::max_digits10);
    os << values.rows() << ' ' << values.cols() << '\n';
    for (int i = 0; i < values.rows(); ++i) {
        os << graph.entities.name(i);
        for (int j = 0; j < values.cols(); ++j) os << ' ' << values.at(i, j);
        os << '\n';
    }
    if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace relatt
