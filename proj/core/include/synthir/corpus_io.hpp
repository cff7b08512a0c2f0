#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace synthir {

// One corpus entry in the BEIR JSONL layout (`_id`, optional `title`, `text`).
struct Document {
    std::string id;
    std::string title;
    std::string text;

    bool operator==(const Document&) const = default;
};

struct Query {
    std::string id;
    std::string text;

    bool operator==(const Query&) const = default;
};

// Graded relevance judgments: query-id -> doc-id -> grade.
struct Qrels {
    std::map<std::string, std::map<std::string, int>> judgments;

    bool operator==(const Qrels&) const = default;
};

struct ScoredDoc {
    std::string doc_id;
    double score;

    bool operator==(const ScoredDoc&) const = default;
};

// Per-query ranked lists. Each list is sorted by score descending,
// ties broken by doc-id ascending.
struct Run {
    std::map<std::string, std::vector<ScoredDoc>> rankings;

    bool operator==(const Run&) const = default;
};

enum class Label { positive, negative };

struct TrainExample {
    std::string query;
    std::string doc_id;
    std::string doc_text;
    Label label;

    bool operator==(const TrainExample&) const = default;
};

// `title + " " + text` collapsed into the single indexed/scored field.
std::string flat_text(const Document& doc);

// Streaming corpus reader; `fn` is invoked per document in file order.
// Throws on malformed JSON (naming the line), duplicate ids, invalid UTF-8.
void for_each_document(const std::string& path,
                       const std::function<void(Document&&)>& fn);
std::vector<Document> load_corpus(const std::string& path);
void write_corpus(const std::vector<Document>& docs, const std::string& path);

std::vector<Query> load_queries(const std::string& path);

// TSV `query-id <tab> corpus-id <tab> score`, optional header row.
Qrels load_qrels(const std::string& path);
void write_qrels(const Qrels& qrels, const std::string& path);

// TREC 6-column run format: `qid Q0 docid rank score tag`.
void write_run(const Run& run, const std::string& tag, const std::string& path);
Run load_run(const std::string& path);

// TSV `query <tab> doc-text <tab> label` with label in {"true","false"}.
// Tabs and newlines inside fields are replaced by single spaces on write.
void write_trainset(const std::vector<TrainExample>& examples,
                    const std::string& path);
std::vector<TrainExample> load_trainset(const std::string& path);

// Sorts a ranking into the canonical Run order (score desc, doc-id asc).
void sort_ranking(std::vector<ScoredDoc>& ranking);

bool valid_utf8(std::string_view s);

// Shortest representation of `v` that parses back to the same double.
std::string format_double(double v);

}  // namespace synthir
