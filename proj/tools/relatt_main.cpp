#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relatt/cli/runner.hpp"
#include "relatt/version.hpp"

namespace {

struct Flags {
    std::string config;
    std::vector<std::string> set_kv;
    std::string seed;
    std::string data, out, checkpoint, queries, reference, graph, grid, th;
    bool write_ranks = false;
    bool raw = false;
    bool features_only = false;
};

void add_shared(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "config file (key = value lines)");
    sub->add_option("--seed", f.seed, "master seed (overrides config file and RELATT_SEED)");
    sub->add_option("--set", f.set_kv, "override any config key, e.g. --set lr=0.001")
        ->take_all();
    sub->add_option("--out", f.out, "output directory (output file for infer)");
}

bool given(const CLI::App* sub, const char* name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt && opt->count() > 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relatt " RELATT_VERSION
                 " - knowledge-graph embeddings with relation-aware attention"};
    app.require_subcommand(1);
    Flags f;

    CLI::App* train = app.add_subcommand("train", "train entity and relation embeddings");
    add_shared(train, f);
    train->add_option("--data", f.data, "dataset directory (train.tsv [valid.tsv test.tsv])");

    CLI::App* evaluate = app.add_subcommand("evaluate", "filtered link-prediction metrics");
    add_shared(evaluate, f);
    evaluate->add_option("--checkpoint", f.checkpoint, "model checkpoint");
    evaluate->add_option("--data", f.data, "dataset directory");
    evaluate->add_flag("--write-ranks", f.write_ranks, "include per-triple ranks in report.json");
    evaluate->add_flag("--raw", f.raw, "also report raw (unfiltered) metrics");

    CLI::App* match = app.add_subcommand("match", "unsupervised entity matching");
    add_shared(match, f);
    match->add_option("--checkpoint", f.checkpoint, "model checkpoint");
    match->add_option("--reference", f.reference, "reference dataset directory");
    match->add_option("--queries", f.queries, "directory of query-graph subdirectories");
    match->add_option("--th", f.th, "neighbor threshold in (0, 1]");
    match->add_flag("--features-only", f.features_only,
                    "match on raw feature vectors instead of inferred embeddings");

    CLI::App* infer = app.add_subcommand("infer", "write embeddings for a graph");
    add_shared(infer, f);
    infer->add_option("--checkpoint", f.checkpoint, "model checkpoint");
    infer->add_option("--graph", f.graph, "graph directory (triples.tsv [features.txt])");

    CLI::App* grid = app.add_subcommand("grid", "expand a config matrix into run configs");
    add_shared(grid, f);
    grid->add_option("--grid", f.grid, "grid file (key = v1,v2,... lines)")->required();

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    std::string command = sub->get_name();

    try {
        relatt::RunConfig cfg;
        if (given(sub, "--config")) relatt::apply_config_file(cfg, f.config);
        relatt::apply_env_seed(cfg);
        if (given(sub, "--seed")) relatt::apply_run_kv(cfg, "seed", f.seed);
        for (const std::string& kv : f.set_kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw relatt::ConfigError("--set expects key=value, got '" + kv + "'");
            relatt::apply_run_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (given(sub, "--data")) cfg.data = f.data;
        if (given(sub, "--out")) cfg.out = f.out;
        if (given(sub, "--checkpoint")) cfg.checkpoint = f.checkpoint;
        if (given(sub, "--queries")) cfg.queries = f.queries;
        if (given(sub, "--reference")) cfg.reference = f.reference;
        if (given(sub, "--graph")) cfg.graph = f.graph;
        if (given(sub, "--th")) relatt::apply_run_kv(cfg, "th", f.th);
        if (f.write_ranks) cfg.write_ranks = true;
        if (f.raw) cfg.raw_metrics = true;
        if (f.features_only) cfg.features_only = true;

        if (command == "grid") return relatt::run_grid(cfg, f.grid, cfg.out);
        return relatt::run_command(command, cfg);
    } catch (const relatt::Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", relatt::error_label(e).c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
}
