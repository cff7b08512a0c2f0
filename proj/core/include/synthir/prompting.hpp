#pragma once

#include <optional>
#include <string>
#include <vector>

#include "synthir/corpus_io.hpp"

namespace synthir {

struct FewShotExample {
    std::string document;
    std::string good_query;
    std::optional<std::string> bad_query;
};

// Few-shot template with placeholders {i}, {document}, {good_query},
// {bad_query}. The target block must end exactly where the model's query
// text begins (the generation cue).
struct PromptTemplate {
    std::string name;
    std::string header;
    std::string example_block;
    std::string target_block;
    std::string stop_sequence;

    // Template file: UTF-8 text with `---` lines separating header /
    // per-example block / target block / stop-sequence.
    static PromptTemplate load(const std::string& path);
};

// JSONL with `doc`, `good_query`, optional `bad_query`.
std::vector<FewShotExample> load_fewshot(const std::string& path);

// Renders header + numbered example blocks + target block. Documents longer
// than max_doc_chars are cut at a whitespace boundary when one exists.
std::string render_prompt(const PromptTemplate& tmpl,
                          const std::vector<FewShotExample>& examples,
                          const Document& target, size_t max_doc_chars);

// Truncates at the first stop-sequence or newline (whichever comes first)
// and trims; nullopt signals a degenerate (empty) generation.
std::optional<std::string> parse_generation(const std::string& raw,
                                            const std::string& stop_sequence);

std::string truncate_at_whitespace(const std::string& text, size_t max_chars);

}  // namespace synthir
