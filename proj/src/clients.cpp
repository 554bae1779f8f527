#include "ragfair/clients.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>

#include "ragfair/errors.hpp"

namespace ragfair {

void GenerationParams::validate() const {
    if (!(temperature >= 0.0))
        throw ConfigError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0))
        throw ConfigError("top_p must be in (0, 1]");
    if (top_k < 1)
        throw ConfigError("top_k must be >= 1");
    if (max_tokens < 1)
        throw ConfigError("max_tokens must be >= 1");
}

nlohmann::json GenerationParams::to_json() const {
    return {{"temperature", temperature}, {"top_p", top_p},       {"top_k", top_k},
            {"max_tokens", max_tokens},   {"do_sample", do_sample}, {"seed", seed}};
}

void EndpointConfig::validate() const {
    if (max_concurrency < 1)
        throw ConfigError("max_concurrency must be >= 1");
    if (max_retries < 0)
        throw ConfigError("max_retries must be >= 0");
    if (!(timeout_s > 0.0))
        throw ConfigError("timeout must be positive");
}

std::string EndpointConfig::resolved_api_key() const {
    if (!api_key.empty())
        return api_key;
    if (const char* env = std::getenv("RAGFAIR_API_KEY"))
        return env;
    return {};
}

namespace {

// ---------------------------------------------------------------- stubs ----

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class StubEmbedder final : public EmbeddingClient {
public:
    StubEmbedder(std::size_t dim, std::uint64_t salt) : dim_(dim), salt_(salt) {}

    std::vector<std::vector<double>> embed_batch(
        const std::vector<std::string>& texts) override {
        if (texts.empty())
            throw ArgumentError("embed_batch: empty text list");
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            if (text.empty())
                throw ArgumentError("embed_batch: empty text");
            const std::uint64_t base = splitmix64(salt_ ^ fnv1a(text));
            std::vector<double> v(dim_);
            for (std::size_t i = 0; i < dim_; ++i) {
                const std::uint64_t h = splitmix64(base + i * 0x9e3779b97f4a7c15ULL);
                // top 53 bits -> [0, 1) -> [-1, 1)
                v[i] = static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0) * 2.0 - 1.0;
            }
            out.push_back(std::move(v));
        }
        return out;
    }

private:
    std::size_t dim_;
    std::uint64_t salt_;
};

class StubModel final : public ChatClient {
public:
    explicit StubModel(std::vector<StubRule> rules) : rules_(std::move(rules)) {
        for (auto& rule : rules_)
            lower(rule.keyword);
    }

    std::string chat_complete(const std::string& system_prompt, const std::string& user_prompt,
                              const GenerationParams& params) override {
        if (system_prompt.empty() || user_prompt.empty())
            throw ArgumentError("chat_complete: empty prompt");
        params.validate();
        std::string haystack = user_prompt;
        lower(haystack);
        for (const auto& rule : rules_) {
            if (haystack.find(rule.keyword) != std::string::npos)
                return "The sentiment is " + rule.label + ".";
        }
        return "The sentiment is neutral.";
    }

private:
    static void lower(std::string& s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }

    std::vector<StubRule> rules_;
};

// ------------------------------------------------------------ transport ----

// Runtime-sized counting semaphore; bounds in-flight requests per endpoint.
class Gate {
public:
    explicit Gate(int slots) : slots_(slots) {}

    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return slots_ > 0; });
        --slots_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            ++slots_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int slots_;
};

struct GateGuard {
    explicit GateGuard(Gate& gate) : gate_(gate) { gate_.acquire(); }
    ~GateGuard() { gate_.release(); }
    Gate& gate_;
};

void split_base_url(const std::string& base_url, std::string& origin, std::string& prefix) {
    const std::size_t scheme = base_url.find("://");
    const std::size_t path_start =
        base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
        origin = base_url;
        prefix.clear();
    } else {
        origin = base_url.substr(0, path_start);
        prefix = base_url.substr(path_start);
    }
    while (!prefix.empty() && prefix.back() == '/')
        prefix.pop_back();
}

class Transport {
public:
    Transport(EndpointConfig cfg, SleepFn sleep)
        : cfg_(std::move(cfg)),
          sleep_(sleep ? std::move(sleep)
                       : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
          gate_(cfg_.max_concurrency) {
        cfg_.validate();
        if (cfg_.base_url.empty())
            throw ConfigError("endpoint base_url is empty");
        split_base_url(cfg_.base_url, origin_, path_prefix_);
    }

    const EndpointConfig& config() const { return cfg_; }

    nlohmann::json post_json(const std::string& path, const nlohmann::json& body) {
        GateGuard guard(gate_);
        const std::string full_path = path_prefix_ + path;
        const std::string payload = body.dump();

        std::string last_error;
        int attempts = 0;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0)
                sleep_(backoff_delay(attempt));
            ++attempts;

            httplib::Client cli(origin_);
            cli.set_connection_timeout(timeout_seconds(), timeout_microseconds());
            cli.set_read_timeout(timeout_seconds(), timeout_microseconds());
            cli.set_write_timeout(timeout_seconds(), timeout_microseconds());
            const std::string key = cfg_.resolved_api_key();
            if (!key.empty())
                cli.set_default_headers({{"Authorization", "Bearer " + key}});

            auto res = cli.Post(full_path, payload, "application/json");
            if (!res) {
                last_error = "connection to " + origin_ + " failed (" +
                             httplib::to_string(res.error()) + ")";
                continue;
            }
            if (res->status >= 200 && res->status < 300) {
                auto parsed = nlohmann::json::parse(res->body, nullptr, false);
                if (parsed.is_discarded())
                    throw ProtocolError("invalid JSON from " + full_path);
                return parsed;
            }
            const bool retryable =
                res->status == 408 || res->status == 429 || res->status >= 500;
            if (!retryable)
                throw TransportError("HTTP " + std::to_string(res->status) + " from " +
                                         full_path + ": " + res->body.substr(0, 200),
                                     attempts);
            last_error = "HTTP " + std::to_string(res->status) + " from " + full_path;
        }
        throw TransportError(last_error + " after " + std::to_string(attempts) + " attempts",
                             attempts);
    }

private:
    std::chrono::milliseconds backoff_delay(int attempt) const {
        double ms = 500.0 * std::pow(2.0, attempt - 1);
        if (cfg_.retry_jitter) {
            thread_local std::mt19937_64 rng(std::random_device{}());
            std::uniform_real_distribution<double> scale(0.5, 1.5);
            ms *= scale(rng);
        }
        return std::chrono::milliseconds(static_cast<long>(ms));
    }

    time_t timeout_seconds() const { return static_cast<time_t>(cfg_.timeout_s); }
    long timeout_microseconds() const {
        return static_cast<long>((cfg_.timeout_s - std::floor(cfg_.timeout_s)) * 1e6);
    }

    EndpointConfig cfg_;
    SleepFn sleep_;
    Gate gate_;
    std::string origin_;
    std::string path_prefix_;
};

class HttpEmbeddingClient final : public EmbeddingClient {
public:
    HttpEmbeddingClient(EndpointConfig cfg, SleepFn sleep)
        : transport_(std::move(cfg), std::move(sleep)) {}

    std::vector<std::vector<double>> embed_batch(
        const std::vector<std::string>& texts) override {
        if (texts.empty())
            throw ArgumentError("embed_batch: empty text list");
        for (const auto& t : texts)
            if (t.empty())
                throw ArgumentError("embed_batch: empty text");

        nlohmann::json body{{"model", transport_.config().model_name}, {"input", texts}};
        const nlohmann::json res = transport_.post_json("/v1/embeddings", body);

        if (!res.contains("data") || !res["data"].is_array())
            throw ProtocolError("embeddings response is missing the data array");
        const auto& data = res["data"];
        if (data.size() != texts.size())
            throw ProtocolError("embeddings response carries " + std::to_string(data.size()) +
                                " vectors for " + std::to_string(texts.size()) + " texts");

        std::vector<std::vector<double>> out(texts.size());
        std::size_t dim = 0;
        for (std::size_t slot = 0; slot < data.size(); ++slot) {
            const auto& item = data[slot];
            if (!item.contains("embedding") || !item["embedding"].is_array())
                throw ProtocolError("embeddings response item is missing the embedding array");
            const std::size_t idx =
                item.contains("index") ? item["index"].get<std::size_t>() : slot;
            if (idx >= out.size() || !out[idx].empty())
                throw ProtocolError("embeddings response has bad index " + std::to_string(idx));
            auto vec = item["embedding"].get<std::vector<double>>();
            if (dim == 0)
                dim = vec.size();
            if (vec.size() != dim || dim == 0)
                throw ProtocolError("embedding dimension mismatch within batch");
            out[idx] = std::move(vec);
        }
        return out;
    }

private:
    Transport transport_;
};

class HttpChatClient final : public ChatClient {
public:
    HttpChatClient(EndpointConfig cfg, SleepFn sleep)
        : transport_(std::move(cfg), std::move(sleep)) {}

    std::string chat_complete(const std::string& system_prompt, const std::string& user_prompt,
                              const GenerationParams& params) override {
        if (system_prompt.empty() || user_prompt.empty())
            throw ArgumentError("chat_complete: empty prompt");
        params.validate();

        nlohmann::json body = params.to_json();
        body["model"] = transport_.config().model_name;
        body["messages"] = nlohmann::json::array({
            nlohmann::json{{"role", "system"}, {"content", system_prompt}},
            nlohmann::json{{"role", "user"}, {"content", user_prompt}},
        });
        const nlohmann::json res = transport_.post_json("/v1/chat/completions", body);

        if (!res.contains("choices") || !res["choices"].is_array() || res["choices"].empty())
            throw ProtocolError("chat response is missing choices");
        const auto& message = res["choices"][0];
        if (!message.contains("message") || !message["message"].contains("content") ||
            !message["message"]["content"].is_string())
            throw ProtocolError("chat response is missing message content");
        std::string content = message["message"]["content"].get<std::string>();
        if (content.empty())
            throw EmptyResponseError("chat endpoint returned an empty completion");
        return content;
    }

private:
    Transport transport_;
};

} // namespace

std::unique_ptr<EmbeddingClient> stub_embedder(std::size_t dim, std::uint64_t salt) {
    if (dim < 2)
        throw ArgumentError("stub_embedder: dim must be >= 2");
    return std::make_unique<StubEmbedder>(dim, salt);
}

std::unique_ptr<ChatClient> stub_model(std::vector<StubRule> rules) {
    if (rules.empty())
        throw ArgumentError("stub_model: rule list is empty");
    for (const auto& r : rules)
        if (r.keyword.empty() || r.label.empty())
            throw ArgumentError("stub_model: rule with empty keyword or label");
    return std::make_unique<StubModel>(std::move(rules));
}

std::unique_ptr<EmbeddingClient> make_http_embedding_client(EndpointConfig cfg, SleepFn sleep) {
    return std::make_unique<HttpEmbeddingClient>(std::move(cfg), std::move(sleep));
}

std::unique_ptr<ChatClient> make_http_chat_client(EndpointConfig cfg, SleepFn sleep) {
    return std::make_unique<HttpChatClient>(std::move(cfg), std::move(sleep));
}

} // namespace ragfair
