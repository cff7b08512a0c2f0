#include "synthir/pipeline_eval.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include <json.hpp>

namespace synthir {

Run retrieve_all(const InvertedIndex& index, const std::vector<Query>& queries,
                 size_t depth) {
    if (depth < 1) throw std::invalid_argument("depth must be >= 1");
    Run run;
    for (const auto& q : queries)
        run.rankings[q.id] = index.search_topk(q.text, depth);
    return run;
}

Run rerank(const Run& run, const std::vector<Query>& queries,
           const DocTextLookup& doc_text, Gateway& gateway,
           const RerankSpec& spec) {
    std::map<std::string, std::string> query_text;
    for (const auto& q : queries) query_text[q.id] = q.text;

    struct Task {
        const std::string* qid;
        const ScoredDoc* candidate;
    };
    std::vector<Task> tasks;
    for (const auto& [qid, ranking] : run.rankings) {
        if (!query_text.count(qid))
            throw std::runtime_error("query id \"" + qid + "\" has no query text");
        for (const auto& sd : ranking) tasks.push_back({&qid, &sd});
    }

    std::vector<double> scores(tasks.size());
    size_t threads = spec.parallelism ? spec.parallelism : gateway.parallelism();
    parallel_for(tasks.size(), threads, [&](size_t i) {
        const auto& task = tasks[i];
        if (spec.keep_bm25_scores) {
            scores[i] = task.candidate->score;
            return;
        }
        auto text = doc_text(task.candidate->doc_id);
        if (!text)
            throw std::runtime_error("doc id \"" + task.candidate->doc_id +
                                     "\" not found in corpus");
        scores[i] = gateway.score(query_text.at(*task.qid), *text);
    });

    Run out;
    for (size_t i = 0; i < tasks.size(); i++)
        out.rankings[*tasks[i].qid].push_back({tasks[i].candidate->doc_id, scores[i]});
    for (auto& [_, ranking] : out.rankings) sort_ranking(ranking);
    // Queries whose retrieval came back empty still get an (empty) entry.
    for (const auto& [qid, ranking] : run.rankings)
        if (ranking.empty()) out.rankings[qid];
    return out;
}

void write_metrics_json(const PipelineEvalResult& result,
                        const std::string& dataset_name,
                        const std::string& path) {
    nlohmann::json j;
    j["dataset"] = dataset_name;
    j["bm25_ndcg10"] = result.bm25.mean;
    j["reranked_ndcg10"] = result.reranked.mean;
    j["judged_queries"] = result.bm25.judged_query_count;
    auto& per_query = j["per_query"] = nlohmann::json::object();
    for (const auto& [qid, v] : result.bm25.per_query) {
        per_query[qid]["bm25"] = v;
        per_query[qid]["reranked"] = result.reranked.per_query.at(qid);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

PipelineEvalResult evaluate_pipeline(const InvertedIndex& index,
                                     const std::vector<Query>& queries,
                                     const Qrels& qrels,
                                     const DocTextLookup& doc_text,
                                     Gateway& gateway, const RerankSpec& spec,
                                     const std::string& out_dir,
                                     const std::string& dataset_name) {
    std::filesystem::create_directories(out_dir);
    auto bm25_run = retrieve_all(index, queries, spec.depth);
    write_run(bm25_run, "bm25", out_dir + "/bm25.run");
    auto reranked_run = rerank(bm25_run, queries, doc_text, gateway, spec);
    write_run(reranked_run, spec.scorer_tag, out_dir + "/reranked.run");
    PipelineEvalResult result;
    result.bm25 = evaluate_run(bm25_run, qrels, 10);
    result.reranked = evaluate_run(reranked_run, qrels, 10);
    write_metrics_json(result, dataset_name, out_dir + "/metrics.json");
    return result;
}

}  // namespace synthir
