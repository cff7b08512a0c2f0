#include "synthir/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace synthir {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

std::string sanitize_tsv(std::string s) {
    for (char& c : s)
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

}  // namespace

bool valid_utf8(std::string_view s) {
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = s[i];
        size_t need;
        uint32_t cp;
        if (c < 0x80) { i++; continue; }
        else if ((c & 0xE0) == 0xC0) { need = 1; cp = c & 0x1F; }
        else if ((c & 0xF0) == 0xE0) { need = 2; cp = c & 0x0F; }
        else if ((c & 0xF8) == 0xF0) { need = 3; cp = c & 0x07; }
        else return false;
        if (i + need >= s.size()) return false;
        for (size_t k = 1; k <= need; k++) {
            unsigned char cc = s[i + k];
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Overlong encodings, surrogates, out of range.
        static const uint32_t min_cp[4] = {0, 0x80, 0x800, 0x10000};
        if (cp < min_cp[need]) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        if (cp > 0x10FFFF) return false;
        i += need + 1;
    }
    return true;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string flat_text(const Document& doc) {
    if (doc.title.empty()) return doc.text;
    return doc.title + " " + doc.text;
}

void for_each_document(const std::string& path,
                       const std::function<void(Document&&)>& fn) {
    auto in = open_in(path);
    std::string line;
    size_t lineno = 0;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        if (!valid_utf8(line)) fail(path, lineno, "invalid UTF-8");
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(path, lineno, std::string("malformed JSON: ") + e.what());
        }
        Document doc;
        if (!j.contains("_id") || !j["_id"].is_string())
            fail(path, lineno, "missing string field _id");
        doc.id = j["_id"].get<std::string>();
        if (doc.id.empty()) fail(path, lineno, "empty _id");
        if (!seen.insert(doc.id).second)
            fail(path, lineno, "duplicate _id \"" + doc.id + "\"");
        if (j.contains("title") && !j["title"].is_null())
            doc.title = j["title"].get<std::string>();
        if (!j.contains("text") || !j["text"].is_string())
            fail(path, lineno, "missing string field text");
        doc.text = j["text"].get<std::string>();
        fn(std::move(doc));
    }
}

std::vector<Document> load_corpus(const std::string& path) {
    std::vector<Document> docs;
    for_each_document(path, [&](Document&& d) { docs.push_back(std::move(d)); });
    return docs;
}

void write_corpus(const std::vector<Document>& docs, const std::string& path) {
    auto out = open_out(path);
    for (const auto& d : docs) {
        json j = {{"_id", d.id}, {"title", d.title}, {"text", d.text}};
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Query> load_queries(const std::string& path) {
    auto in = open_in(path);
    std::vector<Query> queries;
    std::unordered_set<std::string> seen;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        if (!valid_utf8(line)) fail(path, lineno, "invalid UTF-8");
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(path, lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!j.contains("_id") || !j["_id"].is_string())
            fail(path, lineno, "missing string field _id");
        Query q;
        q.id = j["_id"].get<std::string>();
        if (q.id.empty()) fail(path, lineno, "empty _id");
        if (!seen.insert(q.id).second)
            fail(path, lineno, "duplicate _id \"" + q.id + "\"");
        if (!j.contains("text") || !j["text"].is_string())
            fail(path, lineno, "missing string field text");
        q.text = j["text"].get<std::string>();
        queries.push_back(std::move(q));
    }
    return queries;
}

Qrels load_qrels(const std::string& path) {
    auto in = open_in(path);
    Qrels qrels;
    std::string line;
    size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        lineno++;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = line.find('\t') != std::string::npos ? split(line, '\t')
                                                         : split_ws(line);
        if (cols.size() != 3) fail(path, lineno, "expected 3 columns");
        // BEIR ships qrels both with and without a header row; a non-numeric
        // third column on the first row marks a header.
        if (first) {
            first = false;
            int dummy;
            auto [p, ec] = std::from_chars(cols[2].data(),
                                           cols[2].data() + cols[2].size(), dummy);
            if (ec != std::errc() || p != cols[2].data() + cols[2].size())
                continue;
        }
        int grade;
        auto [p, ec] = std::from_chars(cols[2].data(),
                                       cols[2].data() + cols[2].size(), grade);
        if (ec != std::errc() || p != cols[2].data() + cols[2].size())
            fail(path, lineno, "non-integer grade \"" + cols[2] + "\"");
        if (grade < 0) fail(path, lineno, "negative grade");
        auto& per_query = qrels.judgments[cols[0]];
        if (!per_query.emplace(cols[1], grade).second)
            fail(path, lineno, "duplicate judgment (" + cols[0] + "," + cols[1] + ")");
    }
    return qrels;
}

void write_qrels(const Qrels& qrels, const std::string& path) {
    auto out = open_out(path);
    for (const auto& [qid, docs] : qrels.judgments)
        for (const auto& [did, grade] : docs)
            out << qid << '\t' << did << '\t' << grade << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

void sort_ranking(std::vector<ScoredDoc>& ranking) {
    std::sort(ranking.begin(), ranking.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
}

void write_run(const Run& run, const std::string& tag, const std::string& path) {
    auto out = open_out(path);
    for (const auto& [qid, ranking] : run.rankings) {
        size_t rank = 1;
        for (const auto& sd : ranking)
            out << qid << " Q0 " << sd.doc_id << ' ' << rank++ << ' '
                << format_double(sd.score) << ' ' << tag << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Run load_run(const std::string& path) {
    auto in = open_in(path);
    Run run;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        auto cols = split_ws(line);
        if (cols.size() != 6) fail(path, lineno, "expected 6 columns");
        double score;
        auto [p, ec] = std::from_chars(cols[4].data(),
                                       cols[4].data() + cols[4].size(), score);
        if (ec != std::errc()) fail(path, lineno, "bad score \"" + cols[4] + "\"");
        run.rankings[cols[0]].push_back({cols[2], score});
    }
    return run;
}

void write_trainset(const std::vector<TrainExample>& examples,
                    const std::string& path) {
    auto out = open_out(path);
    for (const auto& ex : examples)
        out << sanitize_tsv(ex.query) << '\t' << sanitize_tsv(ex.doc_text) << '\t'
            << (ex.label == Label::positive ? "true" : "false") << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<TrainExample> load_trainset(const std::string& path) {
    auto in = open_in(path);
    std::vector<TrainExample> examples;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        if (!valid_utf8(line)) fail(path, lineno, "invalid UTF-8");
        auto cols = split(line, '\t');
        if (cols.size() != 3) fail(path, lineno, "expected 3 tab-separated columns");
        TrainExample ex;
        ex.query = cols[0];
        ex.doc_text = cols[1];
        if (cols[2] == "true") ex.label = Label::positive;
        else if (cols[2] == "false") ex.label = Label::negative;
        else fail(path, lineno, "bad label \"" + cols[2] + "\"");
        examples.push_back(std::move(ex));
    }
    return examples;
}

}  // namespace synthir
