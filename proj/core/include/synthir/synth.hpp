#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synthir/corpus_io.hpp"
#include "synthir/gateway.hpp"
#include "synthir/index.hpp"
#include "synthir/prompting.hpp"
#include "synthir/rng.hpp"

namespace synthir {

struct SyntheticPair {
    std::string doc_id;
    std::string query;
    std::optional<double> mean_logprob;
    std::optional<double> score;

    bool operator==(const SyntheticPair&) const = default;
};

// Resolves a doc-id to its flat (title + " " + text) rendering;
// nullopt when the id is unknown.
using DocTextLookup =
    std::function<std::optional<std::string>(const std::string&)>;

// Single-pass uniform sample without replacement (Algorithm R).
template <typename T>
class ReservoirSampler {
public:
    ReservoirSampler(size_t capacity, uint64_t seed)
        : capacity_(capacity), rng_(seed) {}

    void offer(T value) {
        seen_++;
        if (sample_.size() < capacity_) {
            sample_.push_back(std::move(value));
            return;
        }
        uint64_t slot = rng_.below(seen_);
        if (slot < capacity_) sample_[slot] = std::move(value);
    }

    size_t seen() const { return seen_; }
    std::vector<T>& sample() { return sample_; }

private:
    size_t capacity_;
    Rng rng_;
    uint64_t seen_ = 0;
    std::vector<T> sample_;
};

// Uniform sample of min(n, corpus size) documents, streamed from a BEIR
// corpus file. Deterministic given the seed. Throws on an empty corpus.
std::vector<Document> sample_documents(const std::string& corpus_path, size_t n,
                                       uint64_t seed);
std::vector<Document> sample_documents(const std::vector<Document>& docs,
                                       size_t n, uint64_t seed);

enum class LogprobAgg { mean, sum };

struct GenOptions {
    size_t max_new_tokens = 64;
    size_t max_doc_chars = 1024;
    LogprobAgg logprob_agg = LogprobAgg::mean;
    size_t parallelism = 0;  // 0 = use the gateway's bound
    // When set, completed generations are appended here as pairs JSONL and a
    // restarted run skips documents already present.
    std::string checkpoint_path;
};

struct GenStats {
    size_t generated = 0;
    size_t degenerate = 0;
    size_t resumed = 0;
};

// One query per document: render prompt, generate, parse. Degenerate
// generations are dropped and counted. Output is sorted by doc-id so it is
// independent of completion order.
std::vector<SyntheticPair> generate_queries(
    const std::vector<Document>& docs, const PromptTemplate& tmpl,
    const std::vector<FewShotExample>& examples, Gateway& gateway,
    const GenOptions& options, GenStats* stats = nullptr);

// Top keep_top pairs by mean generation log-probability, ties broken by
// doc-id ascending. Every pair must carry a logprob.
std::vector<SyntheticPair> filter_v1(std::vector<SyntheticPair> pairs,
                                     size_t keep_top);

struct FilterV2Options {
    size_t parallelism = 0;
    std::string cache_path;  // scores cached by (query hash, doc-id)
};

// Scores every pair through the gateway, then keeps the keep_top pairs with
// the highest scores, ties broken by doc-id ascending.
std::vector<SyntheticPair> filter_v2(std::vector<SyntheticPair> pairs,
                                     Gateway& gateway,
                                     const DocTextLookup& doc_text,
                                     size_t keep_top,
                                     const FilterV2Options& options = {});

// One uniform draw from the BM25 top-pool for the pair's query, excluding
// the pair's own document. nullopt = pool empty after exclusion.
std::optional<std::string> mine_negative(const SyntheticPair& pair,
                                         const InvertedIndex& index,
                                         size_t pool_depth, uint64_t seed);

struct TrainsetStats {
    size_t pairs_kept = 0;
    size_t no_negative = 0;
};

// One positive and one negative TrainExample per pair that has a mined
// negative; pairs without one are dropped and counted.
std::vector<TrainExample> build_trainset(
    const std::vector<SyntheticPair>& positives,
    const std::map<std::string, std::string>& negatives,
    const DocTextLookup& doc_text, TrainsetStats* stats = nullptr);

// Indices into the trainset.
struct Batch {
    std::vector<size_t> positives;
    std::vector<size_t> negatives;
};

// One epoch of batches with exactly batch_pos positives and batch_neg
// negatives each, sampled without replacement; the final partial batch is
// dropped. Deterministic given the seed.
std::vector<Batch> emit_batches(const std::vector<TrainExample>& trainset,
                                size_t batch_pos, size_t batch_neg,
                                uint64_t seed);

// Pairs JSONL interchange: {"doc_id","query","mean_logprob"?,"score"?}.
void save_pairs(const std::vector<SyntheticPair>& pairs, const std::string& path);
std::vector<SyntheticPair> load_pairs(const std::string& path);

void save_batches(const std::vector<Batch>& batches, const std::string& path);

// FNV-1a over file bytes, hex-encoded; used for run-manifest checksums.
std::string file_checksum_hex(const std::string& path);

// Bounded fan-out helper; rethrows the first worker exception.
void parallel_for(size_t count, size_t threads,
                  const std::function<void(size_t)>& fn);

}  // namespace synthir
