#include "synthir/analyzer.hpp"

#include <cctype>

namespace synthir {

const std::unordered_set<std::string>& english_stopwords() {
    static const std::unordered_set<std::string> stopwords = {
        "a",    "an",   "and",  "are",   "as",    "at",   "be",   "but",
        "by",   "for",  "if",   "in",    "into",  "is",   "it",   "no",
        "not",  "of",   "on",   "or",    "such",  "that", "the",  "their",
        "then", "there", "these", "they", "this",  "to",   "was",  "will",
        "with"};
    return stopwords;
}

namespace {

bool is_word_char(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}

}  // namespace

std::vector<std::string> Analyzer::analyze(std::string_view text) const {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        if (!remove_stopwords || !english_stopwords().count(cur)) {
            if (stemmer == Stemmer::porter)
                tokens.push_back(porter_stem(std::move(cur)));
            else
                tokens.push_back(std::move(cur));
        }
        cur.clear();
    };
    for (unsigned char c : text) {
        if (is_word_char(c)) {
            cur.push_back(lowercase ? static_cast<char>(std::tolower(c))
                                    : static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

}  // namespace synthir
