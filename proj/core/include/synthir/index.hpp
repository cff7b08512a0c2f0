#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthir/analyzer.hpp"
#include "synthir/corpus_io.hpp"

namespace synthir {

struct Posting {
    uint32_t doc;  // ordinal
    uint32_t tf;
};

// Immutable single-field ("flat") inverted index with BM25 scoring.
// Built once by build_index; afterwards safe to share across threads.
class InvertedIndex {
public:
    static constexpr uint32_t kFormatVersion = 1;

    // Streams `docs` once; title and text are concatenated into one field.
    // Throws on duplicate doc ids.
    static InvertedIndex build(const std::vector<Document>& docs,
                               const Analyzer& analyzer, double k1 = 0.9,
                               double b = 0.4);

    // Sum over query terms present in the doc of
    //   idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl))
    // with idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)).
    // Repeated query terms contribute once per occurrence.
    double bm25_score(const std::vector<std::string>& query_terms,
                      uint32_t doc_ordinal) const;

    // Top k docs with score > 0, sorted by score descending,
    // ties broken by doc-id ascending.
    std::vector<ScoredDoc> search_topk(const std::string& query_text,
                                       size_t k) const;

    size_t doc_count() const { return doc_ids_.size(); }
    const std::string& doc_id(uint32_t ordinal) const { return doc_ids_.at(ordinal); }
    uint32_t doc_length(uint32_t ordinal) const { return doc_lengths_.at(ordinal); }
    double avg_doc_length() const { return avgdl_; }
    double k1() const { return k1_; }
    double b() const { return b_; }
    const Analyzer& analyzer() const { return analyzer_; }

    const std::vector<Posting>* postings(const std::string& term) const;
    size_t term_count() const { return postings_.size(); }

    // Versioned JSON serialization; loading a mismatched version throws.
    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

private:
    InvertedIndex() = default;

    double idf(size_t df) const;

    Analyzer analyzer_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<uint32_t> doc_lengths_;
    std::vector<std::string> doc_ids_;
    double avgdl_ = 0.0;
    double k1_ = 0.9;
    double b_ = 0.4;
};

}  // namespace synthir
