#include <cstdlib>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "cli.hpp"
#include "synthir/index.hpp"
#include "synthir/pipeline_eval.hpp"
#include "synthir/synth.hpp"
#include "test_util.hpp"

using namespace synthir;
using namespace synthir::testing;
using nlohmann::json;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = cli::run_subcommand(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fixtures() { return std::getenv("SYNTHIR_FIXTURES"); }
std::string data_dir() { return std::getenv("SYNTHIR_DATA"); }

json read_manifest(const std::string& out_path) {
    return json::parse(read_file(out_path + ".manifest.json"));
}

struct EnvGuard {
    std::string name;
    EnvGuard(const std::string& n, const std::string& value) : name(n) {
        setenv(name.c_str(), value.c_str(), 1);
    }
    ~EnvGuard() { unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("cli rejects unknown subcommands with exit 1") {
    auto r = run_cli({"frobnicate"});
    CHECK(r.code == 1);
    CHECK(!r.err.empty());
}

TEST_CASE("cli requires a subcommand") {
    auto r = run_cli({});
    CHECK(r.code == 1);
}

TEST_CASE("cli --version exits 0") {
    auto r = run_cli({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find("synthir") != std::string::npos);
}

TEST_CASE("cli missing input file is a runtime error, exit 2") {
    TempDir tmp;
    auto r = run_cli({"sample", "--corpus", tmp.file("nope.jsonl"), "--out",
                      tmp.file("s.jsonl")});
    CHECK(r.code == 2);
    CHECK(r.err.find("nope.jsonl") != std::string::npos);
}

TEST_CASE("cli settings precedence: flags > env > config > defaults") {
    TempDir tmp;
    auto corpus = fixtures() + "/corpus500.jsonl";
    auto out = tmp.file("s.jsonl");
    auto config = tmp.file("config.json");
    write_file(config, R"({"seed": 7, "sample_size": 5})");

    SUBCASE("defaults") {
        auto r = run_cli({"sample", "--corpus", corpus, "--n", "5", "--out", out});
        REQUIRE(r.code == 0);
        CHECK(read_manifest(out)["config"]["seed"] == 42);
    }
    SUBCASE("config file overrides defaults") {
        auto r = run_cli({"sample", "--config", config, "--corpus", corpus,
                          "--out", out});
        REQUIRE(r.code == 0);
        auto cfg = read_manifest(out)["config"];
        CHECK(cfg["seed"] == 7);
        CHECK(cfg["sample_size"] == 5);
    }
    SUBCASE("environment overrides config") {
        EnvGuard guard("SYNTHIR_SEED", "9");
        auto r = run_cli({"sample", "--config", config, "--corpus", corpus,
                          "--out", out});
        REQUIRE(r.code == 0);
        auto cfg = read_manifest(out)["config"];
        CHECK(cfg["seed"] == 9);
        CHECK(cfg["sample_size"] == 5);
    }
    SUBCASE("flags override environment") {
        EnvGuard guard("SYNTHIR_SEED", "9");
        auto r = run_cli({"sample", "--config", config, "--corpus", corpus,
                          "--out", out, "--seed", "11"});
        REQUIRE(r.code == 0);
        CHECK(read_manifest(out)["config"]["seed"] == 11);
    }
}

TEST_CASE("cli sample output matches the library call") {
    TempDir tmp;
    auto corpus = fixtures() + "/corpus500.jsonl";
    auto out = tmp.file("s.jsonl");
    auto r = run_cli({"sample", "--corpus", corpus, "--n", "20", "--out", out,
                      "--seed", "3"});
    REQUIRE(r.code == 0);
    CHECK(load_corpus(out) == sample_documents(corpus, 20, 3));
}

TEST_CASE("cli index then retrieve matches in-process retrieval") {
    TempDir tmp;
    auto corpus = fixtures() + "/corpus500.jsonl";
    auto queries = fixtures() + "/queries.jsonl";
    auto index_path = tmp.file("index.json");
    auto run_path = tmp.file("bm25.run");

    REQUIRE(run_cli({"index", "--corpus", corpus, "--out", index_path}).code == 0);
    REQUIRE(run_cli({"retrieve", "--index", index_path, "--queries", queries,
                     "--depth", "10", "--out", run_path}).code == 0);

    auto index = InvertedIndex::build(load_corpus(corpus), Analyzer{});
    auto expected = retrieve_all(index, load_queries(queries), 10);
    auto loaded = load_run(run_path);
    REQUIRE(loaded.rankings.size() == expected.rankings.size());
    for (const auto& [qid, ranking] : expected.rankings) {
        REQUIRE(loaded.rankings.count(qid));
        const auto& got = loaded.rankings[qid];
        REQUIRE(got.size() == ranking.size());
        for (size_t i = 0; i < ranking.size(); i++) {
            CHECK(got[i].doc_id == ranking[i].doc_id);
            CHECK(got[i].score == doctest::Approx(ranking[i].score));
        }
    }
}

TEST_CASE("cli evaluate prints the mean nDCG") {
    TempDir tmp;
    auto run_path = tmp.file("r.run");
    auto qrels_path = tmp.file("q.tsv");
    write_file(run_path, "q1 Q0 d1 1 2.0 x\nq1 Q0 d2 2 1.0 x\n");
    write_file(qrels_path, "q1\td1\t1\n");
    auto r = run_cli({"evaluate", "--qrels", qrels_path, "--run", run_path,
                      "--k", "10"});
    REQUIRE(r.code == 0);
    CHECK(r.out == "nDCG@10\t1.0000\n");
}

TEST_CASE("cli report renders a table and optional csv") {
    TempDir tmp;
    auto results = tmp.file("results.json");
    auto csv = tmp.file("report.csv");
    write_file(results, R"({"ds1": {"bm25": 0.5}, "ds2": {"bm25": 0.25}})");
    auto r = run_cli({"report", "--results", results, "--csv", csv});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("ds1") != std::string::npos);
    CHECK(r.out.find("Avg") != std::string::npos);
    CHECK(read_file(csv).find("0.375") != std::string::npos);
}

TEST_CASE("cli run-all produces the full artifact set and skips clean stages") {
    TempDir tmp;
    auto out_dir = tmp.file("out");
    std::vector<std::string> args = {
        "run-all",
        "--corpus", fixtures() + "/corpus500.jsonl",
        "--queries", fixtures() + "/queries.jsonl",
        "--qrels", fixtures() + "/qrels.tsv",
        "--template", data_dir() + "/templates/gbq.txt",
        "--fewshot", data_dir() + "/fewshot/msmarco.jsonl",
        "--out-dir", out_dir,
        "--sample-size", "40", "--keep-top", "20", "--pool-depth", "50",
        "--batch-pos", "4", "--batch-neg", "4", "--depth", "50",
        "--gateway", "stub"};

    auto first = run_cli(args);
    REQUIRE(first.code == 0);
    for (const char* name :
         {"sample.jsonl", "pairs.jsonl", "filtered.jsonl", "negatives.tsv",
          "trainset.tsv", "batches.jsonl", "bm25.run", "reranked.run",
          "metrics.json", "report.csv", "report.txt", "manifest.json"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(out_dir + "/" + std::string(name)));
    }
    CHECK(first.err.find("skipping") == std::string::npos);

    auto trainset_before = read_file(out_dir + "/trainset.tsv");
    auto second = run_cli(args);
    REQUIRE(second.code == 0);
    CHECK(second.err.find("skipping") != std::string::npos);
    CHECK(read_file(out_dir + "/trainset.tsv") == trainset_before);

    // Changing the config invalidates recorded stages.
    args.push_back("--seed");
    args.push_back("5");
    auto third = run_cli(args);
    REQUIRE(third.code == 0);
    CHECK(third.err.find("skipping") == std::string::npos);
}
