#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "relatt/cli/config.hpp"
#include "relatt/cli/manifest.hpp"
#include "relatt/cli/runner.hpp"
#include "relatt/kg/io.hpp"
#include "relatt/kg/synth.hpp"
#include "relatt/match/fixture.hpp"

using namespace relatt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("relatt_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p);
    os << content;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(RELATT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

void make_toy_dataset(const fs::path& dir, std::uint64_t seed = 12) {
    KnowledgeGraph g = make_random_kg(30, 3, 120, seed);
    DatasetSplit split = random_split(g, 0.8, 0.1, seed);
    fs::create_directories(dir);
    write_triples((dir / "train.tsv").string(), g, split.train);
    write_triples((dir / "valid.tsv").string(), g, split.valid);
    write_triples((dir / "test.tsv").string(), g, split.test);
}

}  // namespace

TEST_CASE("empty config file keeps the documented defaults") {
    auto dir = temp_dir("defaults");
    write_file(dir / "empty.cfg", "");
    RunConfig cfg;
    apply_config_file(cfg, (dir / "empty.cfg").string());
    CHECK(cfg.train.lr == 0.01);
    CHECK(cfg.train.layers == 2);
    CHECK(cfg.train.dim == 100);
    CHECK(cfg.train.bases == 2);
    CHECK(cfg.train.neg_ratio == 10);
    CHECK(cfg.train.seed == 42);
    CHECK(cfg.train.attention);
    CHECK(cfg.train.add_inverse);
    CHECK(cfg.train.add_self_loop);
}

TEST_CASE("flag-style overrides beat config file values") {
    auto dir = temp_dir("override");
    write_file(dir / "run.cfg", "lr = 0.001\nlayers = 1\n");
    RunConfig cfg;
    apply_config_file(cfg, (dir / "run.cfg").string());
    CHECK(cfg.train.lr == 0.001);
    apply_run_kv(cfg, "lr", "0.01");  // what --set lr=0.01 does
    CHECK(cfg.train.lr == 0.01);
    CHECK(cfg.train.layers == 1);
}

TEST_CASE("unknown keys and type mismatches are named in the error") {
    RunConfig cfg;
    try {
        apply_run_kv(cfg, "learning_rate", "0.1");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
    }
    try {
        apply_run_kv(cfg, "lr", "fast");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("lr") != std::string::npos);
        CHECK(msg.find("real") != std::string::npos);
    }
}

TEST_CASE("config file syntax: comments, spacing, bad lines") {
    auto dir = temp_dir("syntax");
    write_file(dir / "ok.cfg", "# a comment\n  lr=0.005\n\ndim = 32  # trailing comment\n");
    RunConfig cfg;
    apply_config_file(cfg, (dir / "ok.cfg").string());
    CHECK(cfg.train.lr == 0.005);
    CHECK(cfg.train.dim == 32);

    write_file(dir / "bad.cfg", "lr\n");
    RunConfig cfg2;
    CHECK_THROWS_AS(apply_config_file(cfg2, (dir / "bad.cfg").string()), ParseError);
}

TEST_CASE("RELATT_SEED is read, and an explicit seed wins over it") {
    RunConfig cfg;
    setenv("RELATT_SEED", "777", 1);
    apply_env_seed(cfg);
    CHECK(cfg.train.seed == 777);
    apply_run_kv(cfg, "seed", "888");  // flag applied after env
    CHECK(cfg.train.seed == 888);
    setenv("RELATT_SEED", "not_a_number", 1);
    CHECK_THROWS_AS(apply_env_seed(cfg), ConfigError);
    unsetenv("RELATT_SEED");
}

TEST_CASE("config hash changes exactly when an effective value changes") {
    RunConfig a, b;
    CHECK(a.hash() == b.hash());
    b.train.lr = 0.001;
    CHECK(a.hash() != b.hash());
    b.train.lr = a.train.lr;
    CHECK(a.hash() == b.hash());
    b.th = 0.2;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("manifest renders stably and is written atomically") {
    auto dir = temp_dir("manifest");
    RunManifest m{"train", RunConfig{}, {{"load", 0.5}, {"train", 2.0}}};
    write_manifest((dir / "manifest.json").string(), m);
    std::string text = slurp(dir / "manifest.json");
    CHECK(text.find("\"command\": \"train\"") != std::string::npos);
    CHECK(text.find("config_hash") != std::string::npos);
    CHECK(text.find("toolkit_version") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "manifest.json.tmp"));
    // same config -> same rendered hash line
    RunManifest m2{"train", RunConfig{}, {}};
    std::string r1 = render_manifest(m), r2 = render_manifest(m2);
    auto hash_of = [](const std::string& s) {
        auto pos = s.find("config_hash");
        return s.substr(pos, 40);
    };
    CHECK(hash_of(r1) == hash_of(r2));
}

TEST_CASE("train -> evaluate -> infer round trip through the real binary") {
    auto data = temp_dir("e2e_data");
    make_toy_dataset(data);
    auto out = temp_dir("e2e_out");
    write_file(out / "run.cfg",
               "dim = 8\nlayers = 1\nmax_epochs = 40\neval_interval = 20\nneg_ratio = 4\n");

    int rc = run_cli("train --config " + (out / "run.cfg").string() + " --data " + data.string() +
                     " --out " + out.string());
    REQUIRE(rc == 0);
    CHECK(fs::exists(out / "checkpoint.bin"));
    CHECK(fs::exists(out / "history.csv"));
    CHECK(fs::exists(out / "manifest.json"));

    std::string history = slurp(out / "history.csv");
    CHECK(history.rfind("epoch,loss,val_mrr\n", 0) == 0);

    auto eval_out = temp_dir("e2e_eval");
    rc = run_cli("evaluate --checkpoint " + (out / "checkpoint.bin").string() + " --data " +
                 data.string() + " --out " + eval_out.string());
    REQUIRE(rc == 0);
    std::string report = slurp(eval_out / "report.json");
    CHECK(report.find("\"mrr\"") != std::string::npos);
    CHECK(report.find("\"hits\"") != std::string::npos);

    // identical RunConfig (same out dir, same seed): byte-identical report
    rc = run_cli("evaluate --checkpoint " + (out / "checkpoint.bin").string() + " --data " +
                 data.string() + " --out " + eval_out.string());
    REQUIRE(rc == 0);
    CHECK(slurp(eval_out / "report.json") == report);

    // infer on the training graph (table mode dumps the learned embeddings)
    auto graph_dir = temp_dir("e2e_graph");
    KnowledgeGraph g;
    {
        std::unordered_map<std::int64_t, int> seen;
        DatasetSplit split = load_dataset_dir(data.string());
        write_triples((graph_dir / "triples.tsv").string(), split.graph, split.graph.triples);
    }
    auto emb_file = out / "emb.txt";
    rc = run_cli("infer --checkpoint " + (out / "checkpoint.bin").string() + " --graph " +
                 graph_dir.string() + " --out " + emb_file.string());
    REQUIRE(rc == 0);
    CHECK(fs::exists(emb_file));
    std::string emb = slurp(emb_file);
    CHECK(emb.rfind("30 8", 0) == 0);  // N d header
}

TEST_CASE("evaluate with a missing checkpoint fails with a one-line error") {
    auto data = temp_dir("err_data");
    make_toy_dataset(data);
    std::string cmd = std::string(RELATT_CLI_PATH) + " evaluate --checkpoint /no/such.bin --data " +
                      data.string() + " 2>" + (data / "err.txt").string() + " >/dev/null";
    int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 1);
    std::string err = slurp(data / "err.txt");
    CHECK(err.rfind("error: io:", 0) == 0);
    CHECK(err.find("/no/such.bin") != std::string::npos);
    CHECK(std::count(err.begin(), err.end(), '\n') == 1);  // single line
}

TEST_CASE("match subcommand produces a report with all Hits keys") {
    auto root = temp_dir("match_e2e");
    // synthesize a small matching fixture on disk through the synth tool
    int rc = std::system((std::string(RELATT_SYNTH_PATH) +
                          " matching --entities 60 --triples 180 --feature-dim 8 --queries 5"
                          " --hops 1 --seed 4 --out " +
                          root.string() + " >/dev/null 2>&1")
                             .c_str());
    REQUIRE(WEXITSTATUS(rc) == 0);

    auto model_out = temp_dir("match_model");
    write_file(model_out / "run.cfg",
               "dim = 8\nlayers = 1\nmax_epochs = 30\neval_interval = 30\nneg_ratio = 4\n"
               "feature_mode = file\n");
    rc = run_cli("train --config " + (model_out / "run.cfg").string() + " --data " +
                 (root / "reference").string() + " --out " + model_out.string());
    REQUIRE(rc == 0);

    auto match_out = temp_dir("match_report");
    rc = run_cli("match --checkpoint " + (model_out / "checkpoint.bin").string() +
                 " --reference " + (root / "reference").string() + " --queries " +
                 (root / "queries").string() + " --th 0.5 --out " + match_out.string());
    REQUIRE(rc == 0);
    std::string report = slurp(match_out / "match_report.json");
    for (const char* key : {"\"1\"", "\"5\"", "\"10\"", "\"30\""})
        CHECK(report.find(key) != std::string::npos);
}

TEST_CASE("grid subcommand expands the cross product") {
    auto dir = temp_dir("grid");
    write_file(dir / "base.cfg", "dim = 8\n");
    write_file(dir / "grid.cfg", "lr = 0.01,0.001\nlayers = 1,2\nbases = 2\n");
    RunConfig base;
    apply_config_file(base, (dir / "base.cfg").string());
    int rc = run_grid(base, (dir / "grid.cfg").string(), (dir / "runs").string());
    CHECK(rc == 0);
    int count = 0;
    for (auto& e : fs::directory_iterator(dir / "runs")) {
        ++count;
        RunConfig parsed;
        apply_config_file(parsed, e.path().string());
        CHECK(parsed.train.dim == 8);
    }
    CHECK(count == 4);

    write_file(dir / "bad_grid.cfg", "lr = fast,slow\n");
    CHECK_THROWS_AS(run_grid(base, (dir / "bad_grid.cfg").string(), (dir / "runs2").string()),
                    ConfigError);
}
