#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "synthir/analyzer.hpp"
#include "synthir/corpus_io.hpp"
#include "synthir/rng.hpp"

namespace synthir::testing {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("synthir_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string path() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Vocabulary of stem-stable tokens so analyzed text equals raw tokens.
inline std::vector<Document> random_corpus(Rng& rng, size_t n_docs,
                                           size_t vocab = 40,
                                           size_t max_len = 30) {
    std::vector<Document> docs;
    for (size_t i = 0; i < n_docs; i++) {
        Document d;
        d.id = "doc" + std::to_string(i);
        size_t len = 1 + rng.below(max_len);
        for (size_t w = 0; w < len; w++) {
            if (w) d.text += ' ';
            d.text += "t" + std::to_string(rng.below(vocab));
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

inline std::string random_query(Rng& rng, size_t n_terms, size_t vocab = 40) {
    std::string q;
    for (size_t i = 0; i < n_terms; i++) {
        if (i) q += ' ';
        q += "t" + std::to_string(rng.below(vocab));
    }
    return q;
}

// Independent BM25 oracle: naive loops over all docs and terms, recomputing
// df/tf/avgdl from scratch. Stays independent of the InvertedIndex path.
inline std::vector<ScoredDoc> brute_force_bm25(
    const std::vector<Document>& docs, const Analyzer& analyzer,
    const std::string& query_text, size_t k, double k1 = 0.9, double b = 0.4) {
    std::vector<std::vector<std::string>> doc_terms;
    for (const auto& d : docs) doc_terms.push_back(analyzer.analyze(flat_text(d)));
    auto query_terms = analyzer.analyze(query_text);

    double total = 0;
    for (const auto& terms : doc_terms) total += terms.size();
    double avgdl = docs.empty() ? 0.0 : total / docs.size();
    double n = static_cast<double>(docs.size());

    std::vector<ScoredDoc> hits;
    for (size_t d = 0; d < docs.size(); d++) {
        double score = 0.0;
        double dl = static_cast<double>(doc_terms[d].size());
        for (const auto& qt : query_terms) {
            size_t tf = 0;
            for (const auto& t : doc_terms[d])
                if (t == qt) tf++;
            if (tf == 0) continue;
            size_t df = 0;
            for (const auto& terms : doc_terms) {
                for (const auto& t : terms)
                    if (t == qt) { df++; break; }
            }
            double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if (score > 0.0) hits.push_back({docs[d].id, score});
    }
    sort_ranking(hits);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

// Second, naively written nDCG implementation used as the metric oracle.
inline double naive_ndcg(const std::vector<std::string>& ranking,
                         const std::map<std::string, int>& grades, size_t k) {
    auto discount = [](size_t rank1) {
        return std::log(2.0) / std::log(static_cast<double>(rank1) + 1.0);
    };
    double dcg = 0.0;
    for (size_t i = 0; i < ranking.size() && i < k; i++) {
        auto it = grades.find(ranking[i]);
        if (it != grades.end()) dcg += it->second * discount(i + 1);
    }
    std::vector<int> ideal;
    for (const auto& [_, g] : grades) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (size_t i = 0; i < ideal.size() && i < k; i++)
        idcg += ideal[i] * discount(i + 1);
    return dcg / idcg;
}

}  // namespace synthir::testing
