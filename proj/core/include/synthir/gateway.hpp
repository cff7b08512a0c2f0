#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "synthir/analyzer.hpp"

namespace synthir {

struct GenerationResult {
    std::string text;
    std::optional<std::vector<double>> token_logprobs;
};

// Uniform client for text generation and query-document relevance scoring.
// Implementations must be safe to share across threads.
class Gateway {
public:
    virtual ~Gateway() = default;

    // Greedy (temperature-zero) completion of `prompt`.
    virtual GenerationResult generate(const std::string& prompt,
                                      size_t max_new_tokens,
                                      const std::string& stop) = 0;

    // One finite relevance score; higher = more relevant. Comparable across
    // pairs scored by the same model.
    virtual double score(const std::string& query, const std::string& document) = 0;

    // Concurrent in-flight request bound honored by pipeline fan-out.
    virtual size_t parallelism() const { return 1; }
};

// Deterministic local stand-in for a model server. generate() echoes the
// first min(8, n) analyzed terms of the prompt's last "Document:" section
// with a -0.1 logprob per term; score() is Jaccard overlap of analyzed
// term sets.
class StubGateway : public Gateway {
public:
    explicit StubGateway(Analyzer analyzer = {}) : analyzer_(std::move(analyzer)) {}

    GenerationResult generate(const std::string& prompt, size_t max_new_tokens,
                              const std::string& stop) override;
    double score(const std::string& query, const std::string& document) override;
    size_t parallelism() const override { return 4; }

private:
    Analyzer analyzer_;
};

struct HttpGatewayConfig {
    std::string base_url = "http://localhost:8080";
    size_t parallelism = 4;
    int timeout_seconds = 120;
    int max_retries = 3;
    int backoff_initial_ms = 250;  // delay doubles per retry
    std::string bearer_token;      // empty = no Authorization header
};

// JSON-over-HTTP client for the model server contract:
//   POST /v1/generate {"prompt","max_new_tokens","stop","greedy":true}
//     -> {"text", "token_logprobs"?}
//   POST /v1/score {"pairs":[{"query","document"},...]} -> {"scores":[...]}
class HttpGateway : public Gateway {
public:
    explicit HttpGateway(HttpGatewayConfig config);
    ~HttpGateway() override;

    GenerationResult generate(const std::string& prompt, size_t max_new_tokens,
                              const std::string& stop) override;
    double score(const std::string& query, const std::string& document) override;
    std::vector<double> score_batch(
        const std::vector<std::pair<std::string, std::string>>& pairs);
    size_t parallelism() const override;

private:
    std::string post_json(const std::string& path, const std::string& body);

    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace synthir
