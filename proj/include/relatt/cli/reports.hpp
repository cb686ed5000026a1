#pragma once

#include <string>

#include <json.hpp>

#include "relatt/cli/config.hpp"
#include "relatt/match/matching.hpp"
#include "relatt/train/ranking.hpp"
#include "relatt/train/trainer.hpp"

namespace relatt {

inline nlohmann::ordered_json metrics_json(const RankingReport& r) {
    nlohmann::ordered_json m;
    m["mrr"] = r.mrr;
    nlohmann::ordered_json hits = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.hits) hits[std::to_string(k)] = v;
    m["hits"] = hits;
    m["rank_count"] = r.rank_count();
    return m;
}

inline nlohmann::ordered_json config_echo_json(const RunConfig& cfg) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.to_kv()) j[k] = v;
    return j;
}

// evaluate: metrics, config echo, seed; per-triple ranks behind the flag.
inline std::string render_ranking_report(const RankingReport& filtered, const RankingReport* raw,
                                         const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["command"] = "evaluate";
    j["seed"] = cfg.train.seed;
    j["metrics"] = metrics_json(filtered);
    if (raw) j["raw_metrics"] = metrics_json(*raw);
    if (cfg.write_ranks) {
        nlohmann::ordered_json ranks = nlohmann::ordered_json::array();
        for (const auto& pair : filtered.ranks)
            ranks.push_back(nlohmann::ordered_json::array({pair[0], pair[1]}));
        j["ranks"] = ranks;  // [head-side, tail-side] per test triple
    }
    j["config"] = config_echo_json(cfg);
    return j.dump(2) + "\n";
}

// match: Hits@K plus the per-query ranked candidate lists.
inline std::string render_match_report(const MatchReport& report, const Vocab& entities,
                                       const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["command"] = "match";
    j["seed"] = cfg.train.seed;
    j["th"] = cfg.th;
    nlohmann::ordered_json hits = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.hits) hits[std::to_string(k)] = v;
    j["hits"] = hits;
    j["query_count"] = report.queries.size();
    nlohmann::ordered_json queries = nlohmann::ordered_json::array();
    for (const QueryMatch& q : report.queries) {
        nlohmann::ordered_json qj;
        qj["ground_truth"] = q.ground_truth;
        qj["rank"] = q.rank;
        nlohmann::ordered_json cands = nlohmann::ordered_json::array();
        for (const MatchCandidate& c : q.candidates)
            cands.push_back(nlohmann::ordered_json::array({entities.name(c.entity), c.score}));
        qj["candidates"] = cands;
        queries.push_back(qj);
    }
    j["queries"] = queries;
    j["config"] = config_echo_json(cfg);
    return j.dump(2) + "\n";
}

// history CSV: one line per epoch, val_mrr only on evaluation epochs.
inline std::string render_history_csv(const std::vector<EpochStat>& history) {
    std::string out = "epoch,loss,val_mrr\n";
    char buf[96];
    for (const EpochStat& s : history) {
        if (s.val_mrr)
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", s.epoch, s.loss, *s.val_mrr);
        else
            std::snprintf(buf, sizeof(buf), "%d,%.17g,\n", s.epoch, s.loss);
        out += buf;
    }
    return out;
}

}  // namespace relatt
