#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synthir/corpus_io.hpp"

namespace synthir {

struct EvalResult {
    std::map<std::string, double> per_query;
    double mean = 0.0;
    size_t judged_query_count = 0;
};

// nDCG with linear gain and log2(rank+1) discount (the trec_eval ndcg_cut
// convention). Requires at least one positive grade; callers must exclude
// queries without one.
double ndcg_at_k(const std::vector<std::string>& ranking,
                 const std::map<std::string, int>& grades, size_t k);

// Scores every qrels query that has a positive grade. Queries in the run but
// not in qrels are ignored; qrels queries missing from the run score 0.
// Throws if no query can be scored.
EvalResult evaluate_run(const Run& run, const Qrels& qrels, size_t k);

// Table-1-style aggregation: one row per dataset, one column per system,
// plus an average row and, when a subset is given, a subset-average row.
struct ReportTable {
    std::vector<std::string> systems;
    // (row label, per-system values); average rows carry labels "Avg" / "Avg subset".
    std::vector<std::pair<std::string, std::vector<double>>> rows;
};

ReportTable aggregate_report(
    const std::map<std::string, std::map<std::string, double>>& results,
    const std::optional<std::vector<std::string>>& subset = std::nullopt);

// Rounds half-away-from-zero to 3 decimals for rendering.
std::string render_cell(double v);
std::string render_text(const ReportTable& table);
std::string render_csv(const ReportTable& table);

}  // namespace synthir
