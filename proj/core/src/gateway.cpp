#include "synthir/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace synthir {

GenerationResult StubGateway::generate(const std::string& prompt,
                                       size_t max_new_tokens,
                                       const std::string& /*stop*/) {
    if (prompt.empty()) throw std::invalid_argument("empty prompt");
    if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
    std::string doc = prompt;
    size_t pos = prompt.rfind("Document:");
    if (pos != std::string::npos) {
        doc = prompt.substr(pos + 9);
        size_t nl = doc.find('\n');
        if (nl != std::string::npos) doc.resize(nl);
    }
    auto terms = analyzer_.analyze(doc);
    size_t n = std::min<size_t>(8, terms.size());
    GenerationResult result;
    for (size_t i = 0; i < n; i++) {
        if (i) result.text += ' ';
        result.text += terms[i];
    }
    result.token_logprobs = std::vector<double>(n, -0.1);
    return result;
}

double StubGateway::score(const std::string& query, const std::string& document) {
    if (query.empty() || document.empty())
        throw std::invalid_argument("score requires non-empty query and document");
    auto qt = analyzer_.analyze(query);
    auto dt = analyzer_.analyze(document);
    std::set<std::string> qs(qt.begin(), qt.end());
    std::set<std::string> ds(dt.begin(), dt.end());
    std::vector<std::string> inter, uni;
    std::set_intersection(qs.begin(), qs.end(), ds.begin(), ds.end(),
                          std::back_inserter(inter));
    std::set_union(qs.begin(), qs.end(), ds.begin(), ds.end(),
                   std::back_inserter(uni));
    if (uni.empty()) return 0.0;
    return static_cast<double>(inter.size()) / uni.size();
}

struct HttpGateway::Impl {
    HttpGatewayConfig config;
    std::string host;  // scheme://host:port
};

HttpGateway::HttpGateway(HttpGatewayConfig config)
    : impl_(std::make_unique<Impl>()) {
    impl_->config = std::move(config);
    // httplib::Client takes scheme://host:port directly. One client is built
    // per request because httplib clients are not thread safe.
    impl_->host = impl_->config.base_url;
}

HttpGateway::~HttpGateway() = default;

size_t HttpGateway::parallelism() const { return impl_->config.parallelism; }

std::string HttpGateway::post_json(const std::string& path, const std::string& body) {
    const auto& cfg = impl_->config;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; attempt++) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(
                cfg.backoff_initial_ms * (1LL << (attempt - 1)));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(impl_->host);
        client.set_connection_timeout(cfg.timeout_seconds, 0);
        client.set_read_timeout(cfg.timeout_seconds, 0);
        httplib::Headers headers;
        if (!cfg.bearer_token.empty())
            headers.emplace("Authorization", "Bearer " + cfg.bearer_token);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server status " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200);
            continue;
        }
        if (res->status != 200)
            throw std::runtime_error("model service error (status " +
                                     std::to_string(res->status) + "): " +
                                     res->body.substr(0, 200));
        return res->body;
    }
    throw std::runtime_error("model service unreachable after " +
                             std::to_string(cfg.max_retries + 1) +
                             " attempts; last error: " + last_error);
}

GenerationResult HttpGateway::generate(const std::string& prompt,
                                       size_t max_new_tokens,
                                       const std::string& stop) {
    if (prompt.empty()) throw std::invalid_argument("empty prompt");
    if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
    nlohmann::json req = {{"prompt", prompt},
                          {"max_new_tokens", max_new_tokens},
                          {"stop", stop},
                          {"greedy", true}};
    auto body = post_json("/v1/generate", req.dump());
    auto j = nlohmann::json::parse(body);
    GenerationResult result;
    result.text = j.at("text").get<std::string>();
    if (j.contains("token_logprobs") && !j["token_logprobs"].is_null())
        result.token_logprobs = j["token_logprobs"].get<std::vector<double>>();
    return result;
}

std::vector<double> HttpGateway::score_batch(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    nlohmann::json req;
    auto& arr = req["pairs"] = nlohmann::json::array();
    for (const auto& [q, d] : pairs)
        arr.push_back({{"query", q}, {"document", d}});
    auto body = post_json("/v1/score", req.dump());
    auto j = nlohmann::json::parse(body);
    auto scores = j.at("scores").get<std::vector<double>>();
    if (scores.size() != pairs.size())
        throw std::runtime_error("score response size mismatch");
    return scores;
}

double HttpGateway::score(const std::string& query, const std::string& document) {
    if (query.empty() || document.empty())
        throw std::invalid_argument("score requires non-empty query and document");
    return score_batch({{query, document}}).at(0);
}

}  // namespace synthir
