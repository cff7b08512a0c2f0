#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace synthir {

// Classic Porter (1980) stemming algorithm. Expects a lowercase word.
std::string porter_stem(std::string word);

// The classic English stopword list (the Lucene default set).
const std::unordered_set<std::string>& english_stopwords();

enum class Stemmer { none, porter };

// Deterministic text analysis: maximal alphanumeric runs, optional
// lowercasing, stopword removal, stemming. Bytes >= 0x80 count as word
// characters so UTF-8 words survive intact.
struct Analyzer {
    bool lowercase = true;
    bool remove_stopwords = true;
    Stemmer stemmer = Stemmer::porter;

    std::vector<std::string> analyze(std::string_view text) const;

    static Analyzer keyword() { return {false, false, Stemmer::none}; }
};

}  // namespace synthir
