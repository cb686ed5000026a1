// Generates synthetic datasets: toy knowledge graphs for training runs and
// matching fixtures (reference graph + query ego-networks).
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "relatt/cli/runner.hpp"
#include "relatt/kg/features.hpp"
#include "relatt/kg/io.hpp"
#include "relatt/kg/synth.hpp"
#include "relatt/match/fixture.hpp"

namespace fs = std::filesystem;

namespace {

relatt::Tensor gaussian_features(int n, int dim, std::uint64_t seed) {
    relatt::Rng rng = relatt::Rng::stream(seed, relatt::RngStream::Synth, /*lane=*/1);
    relatt::Tensor t = relatt::Tensor::zeros({n, dim});
    double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * scale;
    return t;
}

int synth_kg(int entities, int relations, int triples, double valid_frac, double test_frac,
             int feature_dim, std::uint64_t seed, const std::string& out) {
    relatt::KnowledgeGraph g = relatt::make_random_kg(entities, relations, triples, seed);
    relatt::DatasetSplit split =
        relatt::random_split(g, 1.0 - valid_frac - test_frac, valid_frac, seed);
    fs::create_directories(out);
    relatt::write_triples((fs::path(out) / "train.tsv").string(), g, split.train);
    if (!split.valid.empty())
        relatt::write_triples((fs::path(out) / "valid.tsv").string(), g, split.valid);
    if (!split.test.empty())
        relatt::write_triples((fs::path(out) / "test.tsv").string(), g, split.test);
    if (feature_dim > 0)
        relatt::write_features((fs::path(out) / "features.txt").string(), g,
                               gaussian_features(entities, feature_dim, seed));
    std::printf("kg: %d entities, %d relations, %zu/%zu/%zu train/valid/test triples -> %s\n",
                g.n_entities(), g.n_relations(), split.train.size(), split.valid.size(),
                split.test.size(), out.c_str());
    return 0;
}

int synth_matching(const relatt::MatchingFixtureSpec& spec, const std::string& out) {
    relatt::MatchingFixture fx = relatt::make_matching_fixture(spec);
    fs::path root(out);
    fs::create_directories(root / "reference");
    relatt::write_triples((root / "reference" / "train.tsv").string(), fx.reference,
                          fx.reference.triples);
    relatt::write_features((root / "reference" / "features.txt").string(), fx.reference,
                           fx.features);
    for (std::size_t i = 0; i < fx.queries.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "q%03zu", i);
        relatt::write_query_dir((root / "queries" / name).string(), fx.queries[i]);
    }
    std::printf("matching: reference %d entities / %zu triples, %zu queries -> %s\n",
                fx.reference.n_entities(), fx.reference.triples.size(), fx.queries.size(),
                out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relatt-synth - synthetic dataset generator"};
    app.require_subcommand(1);

    int entities = 50, relations = 4, triples = 200, feature_dim = 0;
    double valid_frac = 0.0, test_frac = 0.0;
    std::uint64_t seed = 1;
    std::string out = "synth";

    CLI::App* kg = app.add_subcommand("kg", "random knowledge graph dataset");
    kg->add_option("--entities", entities);
    kg->add_option("--relations", relations);
    kg->add_option("--triples", triples);
    kg->add_option("--valid-frac", valid_frac);
    kg->add_option("--test-frac", test_frac);
    kg->add_option("--features", feature_dim, "write features.txt with this width");
    kg->add_option("--seed", seed);
    kg->add_option("--out", out)->required();

    relatt::MatchingFixtureSpec spec;
    CLI::App* matching = app.add_subcommand("matching", "reference graph + query ego-networks");
    matching->add_option("--entities", spec.n_entities);
    matching->add_option("--relations", spec.n_relations);
    matching->add_option("--triples", spec.n_triples);
    matching->add_option("--feature-dim", spec.feature_dim);
    matching->add_option("--queries", spec.n_queries);
    matching->add_option("--hops", spec.hops, "receptive-field depth (use the model's layer count)");
    matching->add_option("--noise", spec.feature_noise, "sd of query feature noise");
    matching->add_option("--seed", spec.seed);
    matching->add_option("--noise-seed", spec.noise_seed);
    matching->add_option("--out", out)->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (app.got_subcommand(kg))
            return synth_kg(entities, relations, triples, valid_frac, test_frac, feature_dim, seed,
                            out);
        return synth_matching(spec, out);
    } catch (const relatt::Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", relatt::error_label(e).c_str(), e.what());
        return 1;
    }
}
