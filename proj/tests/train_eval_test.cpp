#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "relatt/kg/synth.hpp"
#include "relatt/train/model_io.hpp"
#include "relatt/train/ranking.hpp"
#include "relatt/train/trainer.hpp"
#include "support/oracles.hpp"

using namespace relatt;

namespace {

Tensor random_emb(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t = Tensor::zeros({n, d});
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-1, 1);
    return t;
}

std::set<std::tuple<int, int, int>> known_set(const DatasetSplit& split) {
    std::set<std::tuple<int, int, int>> s;
    for (const auto* part : {&split.train, &split.valid, &split.test})
        for (const Triple& t : *part) s.insert({t.head, t.rel, t.tail});
    return s;
}

}  // namespace

TEST_CASE("rank_triple: strictly highest score ranks first") {
    // 3 entities, diag picks coordinate 0; embeddings chosen so (0, r, 1) wins
    Tensor emb = Tensor::matrix(3, 2, {1, 0, /**/ 5, 0, /**/ 1, 0});
    Tensor diag = Tensor::matrix(1, 2, {1, 0});
    FilterIndex filter = FilterIndex::from_triples(std::vector<Triple>{{0, 0, 1}});
    CHECK(rank_triple({0, 0, 1}, emb, diag, filter, CorruptionSide::Tail) == 1);
}

TEST_CASE("rank_triple: constant scorer is pessimistic over surviving candidates") {
    int n = 7;
    Tensor emb = Tensor::zeros({n, 2});  // every score is 0
    Tensor diag = Tensor::matrix(1, 2, {1, 1});
    std::vector<Triple> known{{0, 0, 1}, {0, 0, 2}, {0, 0, 3}};
    FilterIndex filter = FilterIndex::from_triples(known);
    // tail side: candidates are 7 entities minus 2 filtered (known, not the test one)
    int rank = rank_triple({0, 0, 1}, emb, diag, filter, CorruptionSide::Tail);
    CHECK(rank == 5);  // F = 5 surviving candidates, all tied
}

TEST_CASE("rank_triple equals the exhaustive oracle on random instances") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        KnowledgeGraph g = make_random_kg(5 + static_cast<int>(seed % 4), 2, 10, 700 + seed);
        DatasetSplit split = random_split(g, 0.6, 0.2, seed);
        Tensor emb = random_emb(g.n_entities(), 3, seed + 1);
        Tensor diag = random_emb(g.n_relations(), 3, seed + 2);
        FilterIndex filter = FilterIndex::from_split(split);
        auto known = known_set(split);
        for (const Triple& t : split.test) {
            CHECK(rank_triple(t, emb, diag, filter, CorruptionSide::Tail) ==
                  oracle::rank(t, emb, diag, known, /*tail_side=*/true));
            CHECK(rank_triple(t, emb, diag, filter, CorruptionSide::Head) ==
                  oracle::rank(t, emb, diag, known, /*tail_side=*/false));
        }
    }
}

TEST_CASE("filtered rank never exceeds the raw rank") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        KnowledgeGraph g = make_random_kg(8, 2, 24, 800 + seed);
        DatasetSplit split = random_split(g, 0.5, 0.25, seed);
        Tensor emb = random_emb(g.n_entities(), 3, seed + 3);
        Tensor diag = random_emb(g.n_relations(), 3, seed + 4);
        FilterIndex filter = FilterIndex::from_split(split);
        for (const Triple& t : split.test)
            for (auto side : {CorruptionSide::Head, CorruptionSide::Tail})
                CHECK(rank_triple(t, emb, diag, filter, side, true) <=
                      rank_triple(t, emb, diag, filter, side, false));
    }
}

TEST_CASE("evaluate aggregates: closed-form arithmetic and recomputability") {
    RankingReport r = RankingReport::from_ranks({{1, 2}, {4, 10}}, kDefaultHitsAt);
    CHECK(r.mrr == Catch::Approx((1.0 + 0.5 + 0.25 + 0.1) / 4.0).margin(1e-15));
    CHECK(r.hits.at(3) == Catch::Approx(0.5).margin(1e-15));
    CHECK(r.hits.at(1) == Catch::Approx(0.25).margin(1e-15));
    CHECK(r.hits.at(10) == Catch::Approx(1.0).margin(1e-15));

    // hits non-decreasing in K, and aggregates recomputable from stored ranks
    RankingReport again = RankingReport::from_ranks(r.ranks, kDefaultHitsAt);
    CHECK(again.mrr == Catch::Approx(r.mrr).margin(1e-12));
    CHECK(r.hits.at(1) <= r.hits.at(3));
    CHECK(r.hits.at(3) <= r.hits.at(10));
}

TEST_CASE("evaluate: all rank-1 means MRR = 1 and Hits@1 = 1") {
    // (0, r, 1) scores 6; the only higher-scoring candidate, (1, r, 1), is a
    // known true triple and gets filtered on the head side
    Tensor emb = Tensor::matrix(3, 1, {2, 3, -1});
    Tensor diag = Tensor::matrix(1, 1, {1});
    std::vector<Triple> test{{0, 0, 1}};
    FilterIndex filter = FilterIndex::from_triples(std::vector<Triple>{{0, 0, 1}, {1, 0, 1}});
    RankingReport r = evaluate_ranking(test, emb, diag, filter);
    CHECK(r.mrr == 1.0);
    CHECK(r.hits.at(1) == 1.0);
}

TEST_CASE("training memorizes a toy graph (overfit oracle)") {
    KnowledgeGraph g = make_bipartite_kg(30, 3, 60, 1234);
    DatasetSplit split;
    split.graph = g;
    split.train = g.triples;

    TrainConfig cfg;
    cfg.dim = 16;
    cfg.layers = 1;
    cfg.lr = 0.01;
    cfg.neg_ratio = 5;
    cfg.max_epochs = 400;
    cfg.eval_interval = 100;
    cfg.seed = 3;

    FeatureSource feats = init_random_features(g, cfg.dim, cfg.seed);
    TrainResult res = train(split, feats, cfg);
    CHECK(res.best_val_mrr > 0.8);  // memorization well under way
    CHECK(res.epochs_run <= 400);
    CHECK_FALSE(res.history.empty());
}

TEST_CASE("early stopping: patience 1 stops at the second non-improving evaluation") {
    KnowledgeGraph g = make_random_kg(20, 2, 40, 555);
    DatasetSplit split;
    split.graph = g;
    split.train = g.triples;
    TrainConfig cfg;
    cfg.dim = 4;
    cfg.layers = 1;
    cfg.max_epochs = 10000;
    cfg.eval_interval = 1;  // evaluate every epoch to hit the patience path fast
    cfg.patience = 1;
    cfg.seed = 9;
    FeatureSource feats = init_random_features(g, cfg.dim, cfg.seed);
    TrainResult res = train(split, feats, cfg);
    CHECK(res.stopped_early);
    // stopping epoch is exactly one evaluation after the best
    CHECK(res.epochs_run == res.best_epoch + 1);
    // the returned checkpoint is the best one, not the last
    CHECK(res.best_val_mrr >= *res.history.back().val_mrr);
}

TEST_CASE("training history carries loss per epoch and MRR on eval epochs") {
    KnowledgeGraph g = make_random_kg(15, 2, 30, 77);
    DatasetSplit split;
    split.graph = g;
    split.train = g.triples;
    TrainConfig cfg;
    cfg.dim = 4;
    cfg.layers = 1;
    cfg.max_epochs = 6;
    cfg.eval_interval = 3;
    cfg.seed = 4;
    FeatureSource feats = init_random_features(g, cfg.dim, cfg.seed);
    TrainResult res = train(split, feats, cfg);
    REQUIRE(res.history.size() == 6);
    CHECK_FALSE(res.history[0].val_mrr.has_value());
    CHECK(res.history[2].val_mrr.has_value());
    CHECK(res.history[5].val_mrr.has_value());
}

TEST_CASE("attention-off training leaves attention parameters at exact zero gradient") {
    KnowledgeGraph g = make_random_kg(12, 2, 24, 88);
    AugmentedGraph ag = augment(g, true, true);
    FeatureSource feats = init_random_features(g, 4, 1);
    ModelDims dims;
    dims.n_relations_aug = ag.n_relations;
    dims.feature_dim = 4;
    dims.hidden_dim = 4;
    dims.layers = 2;
    dims.bases = 2;
    Rng rng(2);
    ModelParams params = ModelParams::init(dims, rng);

    Rng neg_rng(3);
    LabeledTripleBatch batch = sample_negatives(g.triples, 3, g, neg_rng);

    Tape tape;
    RegisteredModel reg = register_model(tape, params, feats);
    ForwardOptions opt;
    opt.attention = false;
    ForwardTrace trace = model_forward_on_tape(tape, ag, params, reg, opt);
    ValueId scores = score_triples(tape, trace.embeddings, reg.distmult_diag, batch.triples);
    tape.backward(bce_loss(tape, scores, batch.labels));

    auto all_zero = [&](ValueId id) {
        const Tensor& grad = tape.grad(id);
        for (std::int64_t i = 0; i < grad.numel(); ++i)
            if (grad[i] != 0.0) return false;
        return true;
    };
    CHECK(all_zero(reg.rel_feats));
    for (const auto& layer : reg.layers) {
        CHECK(all_zero(layer.attn_W));
        CHECK(all_zero(layer.attn_a));
    }
    // the rest of the model does receive gradients
    bool some_nonzero = false;
    const Tensor& g0 = tape.grad(reg.layers[0].self_W0);
    for (std::int64_t i = 0; i < g0.numel(); ++i)
        if (g0[i] != 0.0) some_nonzero = true;
    CHECK(some_nonzero);
}

TEST_CASE("training divergence raises TrainingError with the epoch") {
    KnowledgeGraph g = make_random_kg(10, 2, 20, 99);
    DatasetSplit split;
    split.graph = g;
    split.train = g.triples;
    TrainConfig cfg;
    cfg.dim = 4;
    cfg.layers = 0;
    cfg.max_epochs = 50;
    cfg.eval_interval = 50;
    cfg.seed = 5;
    // features near the double limit overflow the decoder product on epoch 1
    Tensor huge = Tensor::zeros({g.n_entities(), cfg.dim});
    for (std::int64_t i = 0; i < huge.numel(); ++i) huge[i] = 1e200;
    FeatureSource feats(FeatureSource::Mode::Trainable, huge);
    try {
        train(split, feats, cfg);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch == 1);
        CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
}

TEST_CASE("trained model round-trips through the checkpoint file") {
    KnowledgeGraph g = make_random_kg(12, 2, 30, 41);
    DatasetSplit split;
    split.graph = g;
    split.train = g.triples;
    TrainConfig cfg;
    cfg.dim = 5;
    cfg.layers = 2;
    cfg.max_epochs = 3;
    cfg.eval_interval = 3;
    cfg.seed = 21;
    FeatureSource feats = init_random_features(g, cfg.dim, cfg.seed);
    TrainResult res = train(split, feats, cfg);

    TrainedModel model{res.params, res.features, g.entities, g.relations, cfg};
    auto path = std::filesystem::temp_directory_path() / "relatt_model_rt.bin";
    save_model(path.string(), model);
    TrainedModel loaded = load_model(path.string());

    CHECK(loaded.entities.size() == g.n_entities());
    CHECK(loaded.relations.size() == g.n_relations());
    CHECK(loaded.config.dim == cfg.dim);
    CHECK(loaded.config.seed == cfg.seed);
    CHECK_FALSE(loaded.inductive());  // trainable table

    auto a = model.params.named();
    auto b = loaded.params.named();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        REQUIRE(a[i].second->same_shape(*b[i].second));
        for (std::int64_t j = 0; j < a[i].second->numel(); ++j)
            CHECK((*a[i].second)[j] == (*b[i].second)[j]);
    }
    for (std::int64_t j = 0; j < model.features.values().numel(); ++j)
        CHECK(model.features.values()[j] == loaded.features.values()[j]);

    // identical ranking from the reloaded model
    AugmentedGraph ag = augment(g, cfg.add_inverse, cfg.add_self_loop);
    ForwardOutput e1 = model_forward(ag, model.features, model.params, cfg.forward_options(false));
    ForwardOutput e2 = model_forward(ag, loaded.features, loaded.params, cfg.forward_options(false));
    CHECK(max_abs_diff(e1.embeddings, e2.embeddings) == 0.0);
}
