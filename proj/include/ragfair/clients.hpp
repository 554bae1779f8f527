#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace ragfair {

// Generation controls sent with every chat request.
struct GenerationParams {
    double temperature = 0.1;
    double top_p = 0.9;
    int top_k = 50;
    int max_tokens = 150;
    bool do_sample = true;
    std::int64_t seed = 42;

    void validate() const; // ConfigError on out-of-range values
    nlohmann::json to_json() const;
};

struct EndpointConfig {
    std::string base_url;   // e.g. http://localhost:8000
    std::string model_name;
    std::string api_key;    // falls back to RAGFAIR_API_KEY when empty
    double timeout_s = 30.0;
    int max_retries = 2;
    int max_concurrency = 4;
    bool retry_jitter = true; // disabled in tests for reproducible backoff

    void validate() const;
    std::string resolved_api_key() const;
};

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;

    // One raw (un-normalized) vector per text, order-preserving, uniform
    // dimension. Normalization is the caller's job (vecmath).
    virtual std::vector<std::vector<double>> embed_batch(
        const std::vector<std::string>& texts) = 0;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;

    // Raw completion text for a system/user prompt pair.
    virtual std::string chat_complete(const std::string& system_prompt,
                                      const std::string& user_prompt,
                                      const GenerationParams& params) = 0;
};

// Deterministic offline embedder: components come from a seeded hash of
// (salt, text, component index); no network. dim must be >= 2.
std::unique_ptr<EmbeddingClient> stub_embedder(std::size_t dim, std::uint64_t salt);

struct StubRule {
    std::string keyword; // matched case-insensitively as a substring
    std::string label;
};

// Deterministic offline responder: the first rule whose keyword occurs in the
// user prompt selects the label sentence; no match answers "neutral".
std::unique_ptr<ChatClient> stub_model(std::vector<StubRule> rules);

// Injection point so tests can observe backoff without sleeping.
using SleepFn = std::function<void(std::chrono::milliseconds)>;

// OpenAI-compatible endpoints: POST {base_url}/v1/embeddings and
// POST {base_url}/v1/chat/completions. Both clients retry transient failures
// (connect errors, 408/429/5xx) with exponential backoff (base 0.5 s, factor
// 2) and hold a semaphore sized max_concurrency across threads.
std::unique_ptr<EmbeddingClient> make_http_embedding_client(EndpointConfig cfg,
                                                            SleepFn sleep = {});
std::unique_ptr<ChatClient> make_http_chat_client(EndpointConfig cfg, SleepFn sleep = {});

} // namespace ragfair
