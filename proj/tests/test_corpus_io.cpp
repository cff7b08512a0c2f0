#include <set>

#include <doctest.h>

#include "synthir/corpus_io.hpp"
#include "synthir/rng.hpp"
#include "test_util.hpp"

using namespace synthir;
using namespace synthir::testing;

TEST_CASE("load_corpus maps fields and defaults title") {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               "{\"_id\":\"d1\",\"title\":\"A\",\"text\":\"b c\"}\n"
               "{\"_id\":\"d2\",\"text\":\"x\"}\n");
    auto docs = load_corpus(dir.file("c.jsonl"));
    REQUIRE(docs.size() == 2);
    CHECK(docs[0] == Document{"d1", "A", "b c"});
    CHECK(docs[1].title == "");
}

TEST_CASE("load_corpus preserves file order and count") {
    TempDir dir;
    std::string content;
    for (int i = 0; i < 3; i++)
        content += "{\"_id\":\"d" + std::to_string(i) + "\",\"text\":\"t\"}\n";
    write_file(dir.file("c.jsonl"), content);
    auto docs = load_corpus(dir.file("c.jsonl"));
    REQUIRE(docs.size() == 3);
    for (int i = 0; i < 3; i++) CHECK(docs[i].id == "d" + std::to_string(i));
}

TEST_CASE("load_corpus errors name the line") {
    TempDir dir;
    SUBCASE("malformed JSON") {
        write_file(dir.file("c.jsonl"), "{\"_id\":\"d1\",\"text\":\"t\"}\nnot json\n");
        CHECK_THROWS_WITH_AS(load_corpus(dir.file("c.jsonl")),
                             doctest::Contains(":2:"), std::runtime_error);
    }
    SUBCASE("duplicate id") {
        write_file(dir.file("c.jsonl"),
                   "{\"_id\":\"d1\",\"text\":\"t\"}\n{\"_id\":\"d1\",\"text\":\"u\"}\n");
        CHECK_THROWS_WITH_AS(load_corpus(dir.file("c.jsonl")),
                             doctest::Contains("duplicate"), std::runtime_error);
    }
    SUBCASE("invalid UTF-8") {
        write_file(dir.file("c.jsonl"), "{\"_id\":\"d1\",\"text\":\"\xFF\xFE\"}\n");
        CHECK_THROWS_WITH_AS(load_corpus(dir.file("c.jsonl")),
                             doctest::Contains("UTF-8"), std::runtime_error);
    }
}

TEST_CASE("load_qrels") {
    TempDir dir;
    SUBCASE("direct mapping") {
        write_file(dir.file("q.tsv"), "q1\td1\t2\nq1\td2\t0\n");
        auto qrels = load_qrels(dir.file("q.tsv"));
        REQUIRE(qrels.judgments.at("q1").size() == 2);
        CHECK(qrels.judgments.at("q1").at("d1") == 2);
        CHECK(qrels.judgments.at("q1").at("d2") == 0);
    }
    SUBCASE("header row skipped") {
        write_file(dir.file("q.tsv"), "query-id\tcorpus-id\tscore\nq1\td1\t1\n");
        auto qrels = load_qrels(dir.file("q.tsv"));
        CHECK(qrels.judgments.size() == 1);
        CHECK(qrels.judgments.at("q1").at("d1") == 1);
    }
    SUBCASE("numeric first row is data, not header") {
        write_file(dir.file("q.tsv"), "q1\td1\t1\nq2\td2\t2\n");
        CHECK(load_qrels(dir.file("q.tsv")).judgments.size() == 2);
    }
    SUBCASE("non-integer grade") {
        write_file(dir.file("q.tsv"), "q1\td1\t1\nq2\td2\thigh\n");
        CHECK_THROWS_WITH_AS(load_qrels(dir.file("q.tsv")),
                             doctest::Contains("non-integer"), std::runtime_error);
    }
    SUBCASE("duplicate judgment") {
        write_file(dir.file("q.tsv"), "q1\td1\t1\nq1\td1\t2\n");
        CHECK_THROWS_AS(load_qrels(dir.file("q.tsv")), std::runtime_error);
    }
}

TEST_CASE("load_qrels 100-row fixture matches group-by oracle") {
    TempDir dir;
    Rng rng(11);
    std::map<std::string, int> counts;
    std::string content;
    std::set<std::pair<uint64_t, uint64_t>> used;
    for (int i = 0; i < 100; i++) {
        uint64_t q, d;
        do {
            q = rng.below(7);
            d = rng.below(50);
        } while (!used.insert({q, d}).second);
        content += "q" + std::to_string(q) + "\td" + std::to_string(d) + "\t" +
                   std::to_string(rng.below(3)) + "\n";
        counts["q" + std::to_string(q)]++;
    }
    write_file(dir.file("q.tsv"), content);
    auto qrels = load_qrels(dir.file("q.tsv"));
    REQUIRE(qrels.judgments.size() == counts.size());
    for (const auto& [qid, per_doc] : qrels.judgments)
        CHECK(per_doc.size() == static_cast<size_t>(counts.at(qid)));
}

TEST_CASE("write_run format") {
    TempDir dir;
    Run run;
    run.rankings["q1"] = {{"d2", 3.5}, {"d1", 1.0}};
    write_run(run, "bm25", dir.file("r.run"));
    CHECK(read_file(dir.file("r.run")) ==
          "q1 Q0 d2 1 3.5 bm25\nq1 Q0 d1 2 1 bm25\n");
}

TEST_CASE("write_run empty run gives empty file") {
    TempDir dir;
    write_run(Run{}, "t", dir.file("r.run"));
    CHECK(read_file(dir.file("r.run")).empty());
}

TEST_CASE("run round-trip over random runs") {
    TempDir dir;
    Rng rng(42);
    Run run;
    for (int q = 0; q < 50; q++) {
        std::vector<ScoredDoc> ranking;
        size_t n = 1 + rng.below(20);
        for (size_t d = 0; d < n; d++)
            ranking.push_back({"d" + std::to_string(d), rng.unit() * 10});
        sort_ranking(ranking);
        run.rankings["q" + std::to_string(q)] = std::move(ranking);
    }
    write_run(run, "tag", dir.file("r.run"));
    CHECK(load_run(dir.file("r.run")) == run);
}

TEST_CASE("qrels round-trip") {
    TempDir dir;
    Rng rng(43);
    Qrels qrels;
    for (int q = 0; q < 20; q++)
        for (int d = 0; d < 5; d++)
            qrels.judgments["q" + std::to_string(q)]["d" + std::to_string(rng.below(30))] =
                static_cast<int>(rng.below(3));
    write_qrels(qrels, dir.file("q.tsv"));
    CHECK(load_qrels(dir.file("q.tsv")) == qrels);
}

TEST_CASE("trainset format and round-trip") {
    TempDir dir;
    SUBCASE("format definition") {
        write_trainset({{"a", "d1", "b", Label::positive}}, dir.file("t.tsv"));
        CHECK(read_file(dir.file("t.tsv")) == "a\tb\ttrue\n");
    }
    SUBCASE("tabs and newlines collapsed to spaces") {
        write_trainset({{"a\tb", "d1", "x\ny", Label::negative}}, dir.file("t.tsv"));
        CHECK(read_file(dir.file("t.tsv")) == "a b\tx y\tfalse\n");
    }
    SUBCASE("random round-trip of 200") {
        Rng rng(7);
        std::vector<TrainExample> examples;
        for (int i = 0; i < 200; i++)
            examples.push_back({random_query(rng, 1 + rng.below(6)), "",
                                random_query(rng, 1 + rng.below(20)),
                                rng.below(2) ? Label::positive : Label::negative});
        write_trainset(examples, dir.file("t.tsv"));
        CHECK(load_trainset(dir.file("t.tsv")) == examples);
    }
}

TEST_CASE("load_queries") {
    TempDir dir;
    write_file(dir.file("q.jsonl"),
               "{\"_id\":\"q1\",\"text\":\"a\"}\n{\"_id\":\"q2\",\"text\":\"b\"}\n");
    auto queries = load_queries(dir.file("q.jsonl"));
    REQUIRE(queries.size() == 2);
    CHECK(queries[1] == Query{"q2", "b"});

    write_file(dir.file("dup.jsonl"),
               "{\"_id\":\"q1\",\"text\":\"a\"}\n{\"_id\":\"q1\",\"text\":\"b\"}\n");
    CHECK_THROWS_AS(load_queries(dir.file("dup.jsonl")), std::runtime_error);
}

TEST_CASE("flat_text") {
    CHECK(flat_text({"d", "Title", "body"}) == "Title body");
    CHECK(flat_text({"d", "", "body"}) == "body");
}
