#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "trimodal/encoder.hpp"
#include "trimodal/error.hpp"
#include "trimodal/rerank.hpp"

namespace trimodal {

struct HttpOptions {
    int timeout_ms = 30000;
    int retries = 2;          // attempts = retries + 1
    int retry_delay_ms = 200;
};

namespace detail {

// Splits "http://host:port/prefix" into a client base and a path prefix.
struct SplitUrl {
    std::string base;    // scheme://host[:port]
    std::string prefix;  // possibly empty, no trailing slash
};

inline SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorKind::Usage, "endpoint must include scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.base = url;
    } else {
        out.base = url.substr(0, path_start);
        out.prefix = url.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    return out;
}

inline std::string bearer_from_env(const char* var) {
    const char* key = std::getenv(var);
    return key ? std::string(key) : std::string{};
}

// POSTs JSON with retries on transport failure and non-2xx responses.
inline std::string post_json_with_retry(const SplitUrl& url, const std::string& path,
                                        const nlohmann::json& body, const std::string& bearer,
                                        const HttpOptions& options, const char* what) {
    std::string last_error;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
        if (attempt > 0 && options.retry_delay_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(options.retry_delay_ms));
        }
        httplib::Client client(url.base);
        client.set_connection_timeout(std::chrono::milliseconds(options.timeout_ms));
        client.set_read_timeout(std::chrono::milliseconds(options.timeout_ms));
        httplib::Headers headers;
        if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);

        auto res = client.Post(url.prefix + path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        return res->body;
    }
    fail(ErrorKind::External, std::string(what) + " failed after " +
                                  std::to_string(options.retries + 1) + " attempts: " + last_error);
}

}  // namespace detail

// Remote embedding provider. POST {endpoint}/embed with {"texts": [...]},
// expecting {"embeddings": [[...], ...]}. Bearer token from EMBED_API_KEY.
// Transport and non-2xx failures retry; a dimension mismatch is fatal.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(EncoderProfile profile, HttpOptions options = {})
        : profile_(std::move(profile)), options_(options), url_(detail::split_url(profile_.endpoint)) {
        if (profile_.dim == 0) fail(ErrorKind::Usage, "encoder profile needs a positive dim");
    }

    std::vector<DenseVector> embed(const std::vector<std::string>& texts) override {
        nlohmann::json body;
        body["texts"] = texts;
        std::string raw = detail::post_json_with_retry(url_, "/embed", body,
                                                       detail::bearer_from_env("EMBED_API_KEY"),
                                                       options_, "embedding request");
        nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
        if (j.is_discarded() || !j.contains("embeddings") || !j["embeddings"].is_array()) {
            fail(ErrorKind::External, "embedding provider returned malformed JSON");
        }
        const auto& rows = j["embeddings"];
        if (rows.size() != texts.size()) {
            fail(ErrorKind::External, "embedding provider returned wrong count");
        }
        std::vector<DenseVector> out;
        out.reserve(rows.size());
        for (const auto& row : rows) {
            DenseVector v = row.get<DenseVector>();
            if (v.size() != profile_.dim) {
                fail(ErrorKind::External,
                     "embedding dimension mismatch: expected " + std::to_string(profile_.dim) +
                         ", got " + std::to_string(v.size()));
            }
            out.push_back(std::move(v));
        }
        return out;
    }

    std::uint32_t dim() const override { return profile_.dim; }
    std::string fingerprint() const override { return profile_.fingerprint(); }

private:
    EncoderProfile profile_;
    HttpOptions options_;
    detail::SplitUrl url_;
};

// Chat-completions rerank client. POST {base_url}/v1/chat/completions with
// temperature pinned to 0; bearer token from LLM_API_KEY. Throws
// ErrorKind::External after retries; callers fall back per rerank().
class HttpLlmClient : public LlmClient {
public:
    HttpLlmClient(std::string base_url, std::string model, HttpOptions options = {},
                  std::size_t snippet_chars = 300)
        : url_(detail::split_url(base_url)),
          model_(std::move(model)),
          options_(options),
          snippet_chars_(snippet_chars) {}

    std::string complete(const RerankRequest& request) override {
        std::string prompt = request.mode == RerankMode::Listwise
                                 ? build_listwise_prompt(request.query, request.candidates, snippet_chars_)
                                 : build_weight_prompt(request.query, request.candidates, snippet_chars_);
        nlohmann::json body;
        body["model"] = model_;
        body["temperature"] = 0;
        body["messages"] = nlohmann::json::array({nlohmann::json{{"role", "user"}, {"content", prompt}}});

        std::string raw = detail::post_json_with_retry(url_, "/v1/chat/completions", body,
                                                       detail::bearer_from_env("LLM_API_KEY"),
                                                       options_, "rerank request");
        nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
            fail(ErrorKind::External, "LLM returned malformed response");
        }
        const auto& msg = j["choices"][0];
        if (!msg.contains("message") || !msg["message"].contains("content")) {
            fail(ErrorKind::External, "LLM response missing message content");
        }
        return msg["message"]["content"].get<std::string>();
    }

private:
    detail::SplitUrl url_;
    std::string model_;
    HttpOptions options_;
    std::size_t snippet_chars_;
};

}  // namespace trimodal
