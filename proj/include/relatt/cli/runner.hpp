#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "relatt/cli/config.hpp"
#include "relatt/cli/manifest.hpp"
#include "relatt/cli/reports.hpp"
#include "relatt/kg/features.hpp"
#include "relatt/kg/io.hpp"
#include "relatt/match/matching.hpp"
#include "relatt/match/query.hpp"
#include "relatt/train/model_io.hpp"
#include "relatt/train/trainer.hpp"

namespace relatt {

inline std::string error_label(const Error& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "parse";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const CoverageError*>(&e)) return "coverage";
    if (dynamic_cast<const VocabError*>(&e)) return "vocab";
    if (dynamic_cast<const SamplingError*>(&e)) return "sampling";
    if (dynamic_cast<const ModeError*>(&e)) return "mode";
    if (dynamic_cast<const SimilarityError*>(&e)) return "similarity";
    if (dynamic_cast<const TrainingError*>(&e)) return "training";
    if (dynamic_cast<const ContractError*>(&e)) return "contract";
    return "error";
}

class PhaseTimer {
public:
    explicit PhaseTimer(std::vector<PhaseTiming>& out) : out_(out) {}

    template <typename F>
    auto measure(const std::string& name, F&& fn) {
        auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record(name, start);
        } else {
            auto result = fn();
            record(name, start);
            return result;
        }
    }

private:
    void record(const std::string& name, std::chrono::steady_clock::time_point start) {
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out_.push_back(PhaseTiming{name, sec});
    }
    std::vector<PhaseTiming>& out_;
};

namespace detail {

inline void require_exists(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string(what) + " path is required");
    if (!std::filesystem::exists(path))
        throw IoError(std::string(what) + " path '" + path + "' does not exist");
}

inline void require_same_vocab(const Vocab& expect, const Vocab& got, const char* what) {
    if (expect.size() != got.size())
        throw ConfigError(std::string(what) + ": vocabulary size " + std::to_string(got.size()) +
                          " does not match the checkpoint's " + std::to_string(expect.size()));
    for (int i = 0; i < expect.size(); ++i)
        if (expect.name(i) != got.name(i))
            throw ConfigError(std::string(what) + ": vocabulary mismatch at index " +
                              std::to_string(i) + " ('" + got.name(i) + "' vs '" + expect.name(i) +
                              "')");
}

inline FeatureSource make_features(const DatasetSplit& split, const TrainConfig& cfg,
                                   const std::string& data_dir) {
    if (cfg.feature_mode == "file") {
        auto path = std::filesystem::path(data_dir) / "features.txt";
        return load_features(path.string(), split.graph);
    }
    return init_random_features(split.graph, cfg.dim, cfg.seed);
}

}  // namespace detail

inline int run_train(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    cfg.train.validate();
    detail::require_exists(cfg.data, "data");
    fs::create_directories(cfg.out);

    RunManifest manifest{"train", cfg, {}};
    PhaseTimer timer(manifest.timings);

    DatasetSplit split = timer.measure("load", [&] { return load_dataset_dir(cfg.data); });
    FeatureSource features = detail::make_features(split, cfg.train, cfg.data);
    TrainResult result =
        timer.measure("train", [&] { return train(split, std::move(features), cfg.train); });

    timer.measure("save", [&] {
        TrainedModel model{std::move(result.params), std::move(result.features),
                           split.graph.entities, split.graph.relations, cfg.train};
        save_model((fs::path(cfg.out) / "checkpoint.bin").string(), model);
        write_text_atomic((fs::path(cfg.out) / "history.csv").string(),
                          render_history_csv(result.history));
    });
    write_manifest((fs::path(cfg.out) / "manifest.json").string(), manifest);
    std::printf("train: %d epochs, best val MRR %.6f at epoch %d%s\n", result.epochs_run,
                result.best_val_mrr, result.best_epoch,
                result.stopped_early ? " (early stop)" : "");
    return 0;
}

inline int run_evaluate(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    detail::require_exists(cfg.checkpoint, "checkpoint");
    detail::require_exists(cfg.data, "data");
    fs::create_directories(cfg.out);

    RunManifest manifest{"evaluate", cfg, {}};
    PhaseTimer timer(manifest.timings);

    TrainedModel model = timer.measure("load", [&] { return load_model(cfg.checkpoint); });
    DatasetSplit split = load_dataset_dir(cfg.data);
    detail::require_same_vocab(model.entities, split.graph.entities, "evaluate entities");
    detail::require_same_vocab(model.relations, split.graph.relations, "evaluate relations");
    if (split.test.empty()) throw ContractError("evaluate: empty test split in '" + cfg.data + "'");

    RankingReport filtered, raw;
    timer.measure("evaluate", [&] {
        AugmentedGraph graph =
            augment(split.graph, model.config.add_inverse, model.config.add_self_loop);
        ForwardOutput out = model_forward(graph, model.features, model.params,
                                          model.config.forward_options(false));
        FilterIndex filter = FilterIndex::from_split(split);
        filtered = evaluate_ranking(split.test, out.embeddings, model.params.distmult_diag, filter);
        if (cfg.raw_metrics)
            raw = evaluate_ranking(split.test, out.embeddings, model.params.distmult_diag, filter,
                                   kDefaultHitsAt, /*filtered=*/false);
    });

    write_text_atomic((fs::path(cfg.out) / "report.json").string(),
                      render_ranking_report(filtered, cfg.raw_metrics ? &raw : nullptr, cfg));
    write_manifest((fs::path(cfg.out) / "manifest.json").string(), manifest);
    std::printf("evaluate: MRR %.6f  Hits@1 %.6f  Hits@3 %.6f  Hits@10 %.6f\n", filtered.mrr,
                filtered.hits.at(1), filtered.hits.at(3), filtered.hits.at(10));
    return 0;
}

inline int run_match(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    detail::require_exists(cfg.checkpoint, "checkpoint");
    detail::require_exists(cfg.reference, "reference");
    detail::require_exists(cfg.queries, "queries");
    if (cfg.th <= 0.0 || cfg.th > 1.0) throw ConfigError("match: th must be in (0, 1]");
    fs::create_directories(cfg.out);

    RunManifest manifest{"match", cfg, {}};
    PhaseTimer timer(manifest.timings);

    TrainedModel model = timer.measure("load", [&] { return load_model(cfg.checkpoint); });
    DatasetSplit reference = load_dataset_dir(cfg.reference);
    detail::require_same_vocab(model.entities, reference.graph.entities, "reference entities");

    std::vector<QueryGraph> queries;
    for (const std::string& qdir : list_query_dirs(cfg.queries))
        queries.push_back(load_query_dir(qdir));
    if (queries.empty()) throw IoError("match: no query subdirectories in '" + cfg.queries + "'");

    Tensor ref_embs;
    if (!cfg.features_only)
        ref_embs = timer.measure("reference_embeddings",
                                 [&] { return reference_embeddings(model, reference.graph); });

    MatchReport report = timer.measure("match", [&] {
        return evaluate_matching(queries, model, ref_embs, cfg.th, cfg.train.seed,
                                 kDefaultMatchHitsAt, cfg.features_only);
    });

    write_text_atomic((fs::path(cfg.out) / "match_report.json").string(),
                      render_match_report(report, model.entities, cfg));
    write_manifest((fs::path(cfg.out) / "manifest.json").string(), manifest);
    std::printf("match: Hits@1 %.6f  Hits@5 %.6f  Hits@10 %.6f  Hits@30 %.6f\n",
                report.hits.at(1), report.hits.at(5), report.hits.at(10), report.hits.at(30));
    return 0;
}

inline int run_infer(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    detail::require_exists(cfg.checkpoint, "checkpoint");
    detail::require_exists(cfg.graph, "graph");
    if (cfg.out.empty() || fs::is_directory(cfg.out))
        throw ConfigError("infer: --out must name the output file");

    RunManifest manifest{"infer", cfg, {}};
    PhaseTimer timer(manifest.timings);

    TrainedModel model = timer.measure("load", [&] { return load_model(cfg.checkpoint); });
    fs::path triples_path = fs::path(cfg.graph) / "triples.tsv";
    if (!fs::exists(triples_path)) throw IoError("graph dir '" + cfg.graph + "' has no triples.tsv");
    KnowledgeGraph graph = load_triples(triples_path.string());

    Tensor embeddings;
    timer.measure("infer", [&] {
        if (model.inductive()) {
            fs::path feats_path = fs::path(cfg.graph) / "features.txt";
            if (!fs::exists(feats_path))
                throw IoError("graph dir '" + cfg.graph + "' has no features.txt");
            QueryGraph q;
            q.features = load_features(feats_path.string(), graph).values();
            q.graph = graph;
            embeddings = infer_embeddings(q, model);
        } else {
            // learned table: embeddings exist only for the training entities
            detail::require_same_vocab(model.entities, graph.entities, "infer entities");
            detail::require_same_vocab(model.relations, graph.relations, "infer relations");
            AugmentedGraph ag = augment(graph, model.config.add_inverse, model.config.add_self_loop);
            ForwardOutput out = model_forward(ag, model.features, model.params,
                                              model.config.forward_options(false));
            embeddings = out.embeddings;
        }
    });

    write_features(cfg.out, graph, embeddings);
    write_manifest(cfg.out + ".manifest.json", manifest);
    std::printf("infer: wrote %d x %d embeddings to %s\n", embeddings.rows(), embeddings.cols(),
                cfg.out.c_str());
    return 0;
}

// Config-matrix expansion: every `key = v1,v2,...` line in the grid file is a
// dimension; the cross product is written out as standalone config files. No
// orchestration, just the expansion.
inline int run_grid(const RunConfig& base, const std::string& grid_path,
                    const std::string& out_dir) {
    namespace fs = std::filesystem;
    detail::require_exists(grid_path, "grid");
    fs::create_directories(out_dir);

    std::ifstream is(grid_path);
    if (!is) throw IoError("cannot open grid file '" + grid_path + "'");
    std::vector<std::pair<std::string, std::vector<std::string>>> dims;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        std::string t = detail::trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("'" + grid_path + "' line " + std::to_string(line_no) +
                             ": expected key = v1,v2,...");
        std::string key = detail::trim(t.substr(0, eq));
        std::vector<std::string> values;
        std::string rest = t.substr(eq + 1);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            auto comma = rest.find(',', pos);
            std::string v = detail::trim(rest.substr(pos, comma == std::string::npos
                                                              ? std::string::npos
                                                              : comma - pos));
            if (!v.empty()) values.push_back(v);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (values.empty())
            throw ParseError("'" + grid_path + "' line " + std::to_string(line_no) +
                             ": no values for '" + key + "'");
        dims.emplace_back(key, values);
    }
    if (dims.empty()) throw ParseError("'" + grid_path + "': empty grid");

    long long total = 1;
    for (auto& [k, vs] : dims) total *= static_cast<long long>(vs.size());
    std::vector<std::size_t> cursor(dims.size(), 0);
    for (long long i = 0; i < total; ++i) {
        RunConfig combo = base;
        for (std::size_t d = 0; d < dims.size(); ++d)
            apply_run_kv(combo, dims[d].first, dims[d].second[cursor[d]]);  // also typechecks
        combo.train.validate();
        char name[32];
        std::snprintf(name, sizeof(name), "run-%04lld.cfg", i);
        write_text_atomic((fs::path(out_dir) / name).string(), canonical_config_text(combo.to_kv()));
        for (std::size_t d = dims.size(); d-- > 0;) {
            if (++cursor[d] < dims[d].second.size()) break;
            cursor[d] = 0;
        }
    }
    std::printf("grid: wrote %lld configs to %s\n", total, out_dir.c_str());
    return 0;
}

inline int run_command(const std::string& command, const RunConfig& cfg) {
    if (command == "train") return run_train(cfg);
    if (command == "evaluate") return run_evaluate(cfg);
    if (command == "match") return run_match(cfg);
    if (command == "infer") return run_infer(cfg);
    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace relatt
