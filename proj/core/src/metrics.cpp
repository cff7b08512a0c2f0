#include "synthir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace synthir {

double ndcg_at_k(const std::vector<std::string>& ranking,
                 const std::map<std::string, int>& grades, size_t k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    std::vector<int> sorted_grades;
    sorted_grades.reserve(grades.size());
    for (const auto& [_, g] : grades) sorted_grades.push_back(g);
    std::sort(sorted_grades.rbegin(), sorted_grades.rend());
    if (sorted_grades.empty() || sorted_grades.front() <= 0)
        throw std::invalid_argument("ndcg_at_k requires a positive grade");

    double dcg = 0.0;
    size_t depth = std::min(k, ranking.size());
    for (size_t i = 0; i < depth; i++) {
        auto it = grades.find(ranking[i]);
        if (it == grades.end()) continue;
        dcg += it->second / std::log2(static_cast<double>(i) + 2.0);
    }
    double idcg = 0.0;
    for (size_t i = 0; i < std::min(k, sorted_grades.size()); i++)
        idcg += sorted_grades[i] / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

EvalResult evaluate_run(const Run& run, const Qrels& qrels, size_t k) {
    EvalResult result;
    double sum = 0.0;
    for (const auto& [qid, grades] : qrels.judgments) {
        bool has_positive = false;
        for (const auto& [_, g] : grades)
            if (g > 0) { has_positive = true; break; }
        if (!has_positive) continue;
        double v = 0.0;
        auto it = run.rankings.find(qid);
        if (it != run.rankings.end()) {
            std::vector<std::string> ids;
            ids.reserve(it->second.size());
            for (const auto& sd : it->second) ids.push_back(sd.doc_id);
            v = ndcg_at_k(ids, grades, k);
        }
        result.per_query[qid] = v;
        sum += v;
    }
    if (result.per_query.empty())
        throw std::runtime_error("no scorable queries (no positive qrels)");
    result.judged_query_count = result.per_query.size();
    result.mean = sum / result.judged_query_count;
    return result;
}

ReportTable aggregate_report(
    const std::map<std::string, std::map<std::string, double>>& results,
    const std::optional<std::vector<std::string>>& subset) {
    if (results.empty()) throw std::invalid_argument("empty results");
    ReportTable table;
    for (const auto& [_, systems] : results)
        for (const auto& [sys, __] : systems)
            if (std::find(table.systems.begin(), table.systems.end(), sys) ==
                table.systems.end())
                table.systems.push_back(sys);
    std::sort(table.systems.begin(), table.systems.end());

    auto cell = [&](const std::string& dataset, const std::string& sys) {
        auto dit = results.find(dataset);
        if (dit == results.end())
            throw std::runtime_error("missing dataset \"" + dataset + "\"");
        auto sit = dit->second.find(sys);
        if (sit == dit->second.end())
            throw std::runtime_error("missing cell: dataset \"" + dataset +
                                     "\", system \"" + sys + "\"");
        return sit->second;
    };

    for (const auto& [dataset, _] : results) {
        std::vector<double> row;
        for (const auto& sys : table.systems) row.push_back(cell(dataset, sys));
        table.rows.emplace_back(dataset, std::move(row));
    }

    auto avg_row = [&](const std::vector<std::string>& datasets, const std::string& label) {
        std::vector<double> row;
        for (const auto& sys : table.systems) {
            double sum = 0.0;
            for (const auto& ds : datasets) sum += cell(ds, sys);
            row.push_back(sum / datasets.size());
        }
        table.rows.emplace_back(label, std::move(row));
    };

    std::vector<std::string> all;
    for (const auto& [dataset, _] : results) all.push_back(dataset);
    avg_row(all, "Avg");
    if (subset) {
        if (subset->empty()) throw std::invalid_argument("empty subset");
        avg_row(*subset, "Avg subset");
    }
    return table;
}

std::string render_cell(double v) {
    // Half-away-from-zero at 3 decimals.
    double scaled = v * 1000.0;
    double rounded = scaled >= 0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", rounded / 1000.0);
    return buf;
}

std::string render_text(const ReportTable& table) {
    size_t label_w = 7;
    for (const auto& [label, _] : table.rows) label_w = std::max(label_w, label.size());
    std::ostringstream out;
    out << std::string(label_w, ' ');
    for (const auto& sys : table.systems) {
        size_t w = std::max<size_t>(sys.size(), 6);
        out << "  " << std::string(w - sys.size(), ' ') << sys;
    }
    out << '\n';
    for (const auto& [label, values] : table.rows) {
        out << label << std::string(label_w - label.size(), ' ');
        for (size_t i = 0; i < values.size(); i++) {
            auto s = render_cell(values[i]);
            size_t w = std::max<size_t>(table.systems[i].size(), 6);
            out << "  " << std::string(w > s.size() ? w - s.size() : 0, ' ') << s;
        }
        out << '\n';
    }
    return out.str();
}

std::string render_csv(const ReportTable& table) {
    std::ostringstream out;
    out << "dataset";
    for (const auto& sys : table.systems) out << ',' << sys;
    out << '\n';
    for (const auto& [label, values] : table.rows) {
        out << label;
        for (double v : values) out << ',' << render_cell(v);
        out << '\n';
    }
    return out.str();
}

}  // namespace synthir
