#pragma once

#include <string>
#include <vector>

#include "synthir/corpus_io.hpp"
#include "synthir/gateway.hpp"
#include "synthir/index.hpp"
#include "synthir/metrics.hpp"
#include "synthir/synth.hpp"

namespace synthir {

struct RerankSpec {
    size_t depth = 1000;
    std::string scorer_tag = "reranked";
    bool keep_bm25_scores = false;  // report BM25 scores instead of reranker scores
    size_t parallelism = 0;         // 0 = gateway bound
};

// BM25 top-`depth` ranking for every query.
Run retrieve_all(const InvertedIndex& index, const std::vector<Query>& queries,
                 size_t depth);

// Rescoring permutation: every candidate is scored with the gateway and each
// list re-sorted (score desc, doc-id asc). The candidate set per query is
// preserved exactly.
Run rerank(const Run& run, const std::vector<Query>& queries,
           const DocTextLookup& doc_text, Gateway& gateway,
           const RerankSpec& spec);

struct PipelineEvalResult {
    EvalResult bm25;
    EvalResult reranked;
};

// retrieve -> write <out>/bm25.run -> rerank -> write <out>/reranked.run ->
// nDCG@10 for both, plus <out>/metrics.json.
PipelineEvalResult evaluate_pipeline(const InvertedIndex& index,
                                     const std::vector<Query>& queries,
                                     const Qrels& qrels,
                                     const DocTextLookup& doc_text,
                                     Gateway& gateway, const RerankSpec& spec,
                                     const std::string& out_dir,
                                     const std::string& dataset_name);

void write_metrics_json(const PipelineEvalResult& result,
                        const std::string& dataset_name,
                        const std::string& path);

}  // namespace synthir
