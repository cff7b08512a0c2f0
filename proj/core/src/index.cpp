#include "synthir/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace synthir {

InvertedIndex InvertedIndex::build(const std::vector<Document>& docs,
                                   const Analyzer& analyzer, double k1,
                                   double b) {
    if (!(std::isfinite(k1) && k1 >= 0 && std::isfinite(b) && b >= 0))
        throw std::invalid_argument("k1 and b must be finite and >= 0");
    InvertedIndex idx;
    idx.analyzer_ = analyzer;
    idx.k1_ = k1;
    idx.b_ = b;

    std::unordered_set<std::string> seen;
    uint64_t total_len = 0;
    for (const auto& doc : docs) {
        if (!seen.insert(doc.id).second)
            throw std::runtime_error("duplicate doc id \"" + doc.id + "\"");
        auto ordinal = static_cast<uint32_t>(idx.doc_ids_.size());
        idx.doc_ids_.push_back(doc.id);
        auto terms = analyzer.analyze(flat_text(doc));
        idx.doc_lengths_.push_back(static_cast<uint32_t>(terms.size()));
        total_len += terms.size();
        std::map<std::string, uint32_t> tf;
        for (auto& t : terms) tf[std::move(t)]++;
        for (auto& [term, freq] : tf)
            idx.postings_[term].push_back({ordinal, freq});
    }
    idx.avgdl_ = idx.doc_ids_.empty()
                     ? 0.0
                     : static_cast<double>(total_len) / idx.doc_ids_.size();
    return idx;
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

double InvertedIndex::idf(size_t df) const {
    double n = static_cast<double>(doc_count());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double InvertedIndex::bm25_score(const std::vector<std::string>& query_terms,
                                 uint32_t doc_ordinal) const {
    if (doc_ordinal >= doc_count())
        throw std::out_of_range("doc ordinal out of range");
    double dl = doc_lengths_[doc_ordinal];
    double score = 0.0;
    for (const auto& term : query_terms) {
        auto* plist = postings(term);
        if (!plist) continue;
        auto it = std::lower_bound(plist->begin(), plist->end(), doc_ordinal,
                                   [](const Posting& p, uint32_t d) { return p.doc < d; });
        if (it == plist->end() || it->doc != doc_ordinal) continue;
        double tf = it->tf;
        double norm = k1_ * (1.0 - b_ + b_ * dl / avgdl_);
        score += idf(plist->size()) * tf * (k1_ + 1.0) / (tf + norm);
    }
    return score;
}

std::vector<ScoredDoc> InvertedIndex::search_topk(const std::string& query_text,
                                                  size_t k) const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    auto terms = analyzer_.analyze(query_text);
    std::unordered_map<uint32_t, double> acc;
    for (const auto& term : terms) {
        auto* plist = postings(term);
        if (!plist) continue;
        double w = idf(plist->size());
        for (const auto& p : *plist) {
            double tf = p.tf;
            double dl = doc_lengths_[p.doc];
            double norm = k1_ * (1.0 - b_ + b_ * dl / avgdl_);
            acc[p.doc] += w * tf * (k1_ + 1.0) / (tf + norm);
        }
    }
    std::vector<ScoredDoc> hits;
    hits.reserve(acc.size());
    for (const auto& [ordinal, score] : acc)
        if (score > 0.0) hits.push_back({doc_ids_[ordinal], score});
    sort_ranking(hits);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

void InvertedIndex::save(const std::string& path) const {
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["k1"] = k1_;
    j["b"] = b_;
    j["analyzer"] = {{"lowercase", analyzer_.lowercase},
                     {"remove_stopwords", analyzer_.remove_stopwords},
                     {"stemmer", analyzer_.stemmer == Stemmer::porter ? "porter" : "none"}};
    j["doc_ids"] = doc_ids_;
    j["doc_lengths"] = doc_lengths_;
    auto& post = j["postings"] = nlohmann::json::object();
    for (const auto& [term, plist] : postings_) {
        auto& arr = post[term] = nlohmann::json::array();
        for (const auto& p : plist) arr.push_back({p.doc, p.tf});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump();
    if (!out) throw std::runtime_error("write failed: " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.contains("format_version") || j["format_version"].get<uint32_t>() != kFormatVersion)
        throw std::runtime_error("index format version mismatch in " + path);
    InvertedIndex idx;
    idx.k1_ = j["k1"].get<double>();
    idx.b_ = j["b"].get<double>();
    idx.analyzer_.lowercase = j["analyzer"]["lowercase"].get<bool>();
    idx.analyzer_.remove_stopwords = j["analyzer"]["remove_stopwords"].get<bool>();
    idx.analyzer_.stemmer = j["analyzer"]["stemmer"].get<std::string>() == "porter"
                                ? Stemmer::porter
                                : Stemmer::none;
    idx.doc_ids_ = j["doc_ids"].get<std::vector<std::string>>();
    idx.doc_lengths_ = j["doc_lengths"].get<std::vector<uint32_t>>();
    uint64_t total = 0;
    for (auto len : idx.doc_lengths_) total += len;
    idx.avgdl_ = idx.doc_ids_.empty() ? 0.0
                                      : static_cast<double>(total) / idx.doc_ids_.size();
    for (const auto& [term, arr] : j["postings"].items()) {
        auto& plist = idx.postings_[term];
        for (const auto& pair : arr)
            plist.push_back({pair[0].get<uint32_t>(), pair[1].get<uint32_t>()});
    }
    return idx;
}

}  // namespace synthir
