#include <benchmark/benchmark.h>

#include <map>
#include <string>
#include <vector>

#include "synthir/analyzer.hpp"
#include "synthir/corpus_io.hpp"
#include "synthir/index.hpp"
#include "synthir/metrics.hpp"
#include "synthir/rng.hpp"

using namespace synthir;

namespace {

std::vector<Document> make_corpus(size_t n_docs, size_t words_per_doc) {
    Rng rng(7);
    std::vector<Document> docs;
    docs.reserve(n_docs);
    for (size_t i = 0; i < n_docs; i++) {
        Document d;
        d.id = "d" + std::to_string(i);
        for (size_t w = 0; w < words_per_doc; w++) {
            if (w) d.text += ' ';
            d.text += "w" + std::to_string(rng.below(5000));
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

void bm_analyze(benchmark::State& state) {
    Analyzer analyzer;
    std::string text;
    Rng rng(7);
    for (int w = 0; w < 200; w++) text += "understanding retrieval pipelines ";
    for (auto _ : state) benchmark::DoNotOptimize(analyzer.analyze(text));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) * text.size());
}
BENCHMARK(bm_analyze);

void bm_index_build(benchmark::State& state) {
    auto docs = make_corpus(static_cast<size_t>(state.range(0)), 60);
    for (auto _ : state)
        benchmark::DoNotOptimize(InvertedIndex::build(docs, Analyzer{}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_index_build)->Arg(1000)->Arg(10000);

void bm_search_topk(benchmark::State& state) {
    auto docs = make_corpus(static_cast<size_t>(state.range(0)), 60);
    auto index = InvertedIndex::build(docs, Analyzer{});
    Rng rng(9);
    std::vector<std::string> queries;
    for (int i = 0; i < 64; i++) {
        std::string q;
        for (int t = 0; t < 4; t++) q += "w" + std::to_string(rng.below(5000)) + " ";
        queries.push_back(q);
    }
    size_t qi = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.search_topk(queries[qi], 100));
        qi = (qi + 1) % queries.size();
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_search_topk)->Arg(1000)->Arg(10000);

void bm_ndcg(benchmark::State& state) {
    Rng rng(11);
    std::vector<std::string> ranking;
    std::map<std::string, int> grades;
    for (int d = 0; d < 1000; d++) {
        ranking.push_back("d" + std::to_string(d));
        if (rng.below(10) == 0) grades[ranking.back()] = 1 + (int)rng.below(3);
    }
    grades["d0"] = 2;
    for (auto _ : state) benchmark::DoNotOptimize(ndcg_at_k(ranking, grades, 10));
}
BENCHMARK(bm_ndcg);

}  // namespace

BENCHMARK_MAIN();
