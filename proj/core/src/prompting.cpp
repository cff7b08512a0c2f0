#include "synthir/prompting.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace synthir {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void substitute(std::string& text, const std::string& placeholder,
                const std::string& value) {
    size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
}

std::string fill_block(const std::string& block, size_t index,
                       const std::string& document,
                       const FewShotExample* example) {
    std::string out = block;
    if (out.find("{bad_query}") != std::string::npos) {
        if (!example || !example->bad_query)
            throw std::runtime_error(
                "template uses {bad_query} but example " + std::to_string(index) +
                " has none");
        substitute(out, "{bad_query}", *example->bad_query);
    }
    if (example) substitute(out, "{good_query}", example->good_query);
    substitute(out, "{i}", std::to_string(index));
    substitute(out, "{document}", document);
    return out;
}

}  // namespace

std::string truncate_at_whitespace(const std::string& text, size_t max_chars) {
    if (text.size() <= max_chars) return text;
    size_t cut = max_chars;
    size_t ws = text.find_last_of(" \t\n\r", max_chars);
    if (ws != std::string::npos && ws > 0) cut = ws;
    return trim(text.substr(0, cut));
}

PromptTemplate PromptTemplate::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open template " + path);
    std::vector<std::string> sections(1);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "---") {
            sections.emplace_back();
            continue;
        }
        auto& sec = sections.back();
        if (!sec.empty()) sec += '\n';
        sec += line;
    }
    if (sections.size() != 4)
        throw std::runtime_error("template " + path +
                                 ": expected 4 sections separated by --- lines");
    PromptTemplate tmpl;
    tmpl.name = path;
    tmpl.header = sections[0];
    tmpl.example_block = sections[1];
    tmpl.target_block = sections[2];
    tmpl.stop_sequence = trim(sections[3]);
    if (tmpl.stop_sequence.empty())
        throw std::runtime_error("template " + path + ": empty stop sequence");
    return tmpl;
}

std::vector<FewShotExample> load_fewshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<FewShotExample> examples;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed JSON: " + e.what());
        }
        FewShotExample ex;
        ex.document = j.at("doc").get<std::string>();
        ex.good_query = j.at("good_query").get<std::string>();
        if (j.contains("bad_query")) ex.bad_query = j["bad_query"].get<std::string>();
        if (ex.document.empty() || ex.good_query.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": doc and good_query must be non-empty");
        examples.push_back(std::move(ex));
    }
    return examples;
}

std::string render_prompt(const PromptTemplate& tmpl,
                          const std::vector<FewShotExample>& examples,
                          const Document& target, size_t max_doc_chars) {
    if (examples.empty()) throw std::invalid_argument("need at least one example");
    if (max_doc_chars < 1) throw std::invalid_argument("max_doc_chars must be >= 1");
    std::string out = tmpl.header;
    out += '\n';
    for (size_t i = 0; i < examples.size(); i++) {
        out += fill_block(tmpl.example_block, i + 1,
                          truncate_at_whitespace(examples[i].document, max_doc_chars),
                          &examples[i]);
        out += '\n';
    }
    out += fill_block(tmpl.target_block, examples.size() + 1,
                      truncate_at_whitespace(flat_text(target), max_doc_chars),
                      nullptr);
    return out;
}

std::optional<std::string> parse_generation(const std::string& raw,
                                            const std::string& stop_sequence) {
    size_t end = raw.size();
    if (!stop_sequence.empty()) {
        size_t pos = raw.find(stop_sequence);
        if (pos != std::string::npos) end = pos;
    }
    size_t nl = raw.find('\n');
    if (nl != std::string::npos && nl < end) end = nl;
    std::string result = trim(raw.substr(0, end));
    if (result.empty()) return std::nullopt;
    return result;
}

}  // namespace synthir
