#include "ragfair/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "ragfair/analysis.hpp"
#include "ragfair/errors.hpp"
#include "ragfair/jsonl.hpp"

namespace ragfair {
namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_url_token(const std::string& token) {
    return token.rfind("http://", 0) == 0 || token.rfind("https://", 0) == 0 ||
           token.rfind("www.", 0) == 0;
}

// Drops whitespace-delimited tokens that look like URLs.
std::string drop_url_tokens(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_space(text[i])) {
            out += text[i++];
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j]))
            ++j;
        const std::string token = text.substr(i, j - i);
        if (!is_url_token(token))
            out += token;
        i = j;
    }
    return out;
}

// Removes every @ followed by one or more word characters, wherever it occurs.
std::string drop_mentions(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '@' && i + 1 < text.size() && is_word_char(text[i + 1])) {
            std::size_t j = i + 1;
            while (j < text.size() && is_word_char(text[j]))
                ++j;
            i = j;
            continue;
        }
        out += text[i++];
    }
    return out;
}

std::string lowercase_collapse(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

} // namespace

void CleaningConfig::validate() const {
    if (!(iqr_multiplier > 0.0))
        throw ConfigError("iqr_multiplier must be > 0");
    if (min_chars < 1)
        throw ConfigError("min_chars must be >= 1");
    if (token_counter == TokenCounter::external && !external_counter)
        throw ConfigError("external token counter selected but no counter hook provided");
}

std::size_t count_tokens(const std::string& text, const CleaningConfig& cfg) {
    if (cfg.token_counter == TokenCounter::external) {
        if (!cfg.external_counter)
            throw ConfigError("external token counter selected but no counter hook provided");
        return cfg.external_counter(text);
    }
    std::size_t runs = 0;
    bool in_run = false;
    for (char c : text) {
        if (is_space(c)) {
            in_run = false;
        } else if (!in_run) {
            in_run = true;
            ++runs;
        }
    }
    return runs;
}

std::pair<double, double> iqr_bounds(const std::vector<std::size_t>& counts,
                                     double iqr_multiplier) {
    if (counts.empty())
        throw ArgumentError("iqr_bounds: empty count list");
    std::vector<double> values(counts.begin(), counts.end());
    const double q1 = quantile(values, 0.25);
    const double q3 = quantile(values, 0.75);
    const double iqr = q3 - q1;
    return {q1 - iqr_multiplier * iqr, q3 + iqr_multiplier * iqr};
}

std::optional<std::string> clean_text(const std::string& raw, const CleaningConfig& cfg) {
    const std::string cleaned = lowercase_collapse(drop_mentions(drop_url_tokens(raw)));
    if (cleaned.size() < cfg.min_chars)
        return std::nullopt;
    return cleaned;
}

std::vector<Document> clean_corpus(const std::vector<std::pair<std::string, bool>>& raw_docs,
                                   const CleaningConfig& cfg) {
    cfg.validate();

    struct Survivor {
        std::string text;
        bool toxic;
        std::size_t tokens;
    };
    std::vector<Survivor> survivors;
    survivors.reserve(raw_docs.size());
    for (const auto& [text, toxic] : raw_docs) {
        if (auto cleaned = clean_text(text, cfg))
            survivors.push_back({std::move(*cleaned), toxic, 0});
    }
    if (survivors.empty())
        return {};

    std::vector<std::size_t> counts;
    counts.reserve(survivors.size());
    for (auto& s : survivors) {
        s.tokens = count_tokens(s.text, cfg);
        counts.push_back(s.tokens);
    }
    const auto [low, high] = iqr_bounds(counts, cfg.iqr_multiplier);

    std::vector<Document> out;
    out.reserve(survivors.size());
    for (auto& s : survivors) {
        const double tokens = static_cast<double>(s.tokens);
        if (tokens < low || tokens > high)
            continue;
        out.push_back(Document{out.size(), std::move(s.text), s.toxic});
    }
    return out;
}

std::vector<Document> sample_corpus(const std::vector<Document>& docs, double fraction,
                                    std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ArgumentError("sample fraction must be in (0, 1]");
    const std::size_t n = docs.size();
    std::size_t m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    m = std::clamp<std::size_t>(m, n == 0 ? 0 : 1, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(m);
    std::sort(order.begin(), order.end());

    std::vector<Document> out;
    out.reserve(m);
    for (std::size_t idx : order)
        out.push_back(Document{out.size(), docs[idx].text, docs[idx].toxic});
    return out;
}

namespace {

bool parse_toxic_field(const nlohmann::json& j, const std::string& path, int line) {
    const auto& v = j.at("toxic");
    if (v.is_boolean())
        return v.get<bool>();
    if (v.is_number_integer()) {
        const auto i = v.get<std::int64_t>();
        if (i == 0 || i == 1)
            return i == 1;
    }
    throw ConfigError(path + " line " + std::to_string(line) + ": toxic must be boolean or 0/1");
}

} // namespace

std::vector<std::pair<std::string, bool>> load_raw_corpus(const std::string& path) {
    std::vector<std::pair<std::string, bool>> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, int line) {
        if (!j.contains("text") || !j["text"].is_string() || !j.contains("toxic"))
            throw ConfigError(path + " line " + std::to_string(line) +
                              ": expected fields text (string) and toxic");
        out.emplace_back(j["text"].get<std::string>(), parse_toxic_field(j, path, line));
    });
    return out;
}

std::vector<Document> load_documents(const std::string& path) {
    std::vector<Document> out;
    std::unordered_set<std::uint64_t> seen;
    for_each_jsonl(path, [&](const nlohmann::json& j, int line) {
        if (!j.contains("text") || !j["text"].is_string() || !j.contains("toxic") ||
            !j.contains("id") || !j["id"].is_number_integer())
            throw ConfigError(path + " line " + std::to_string(line) +
                              ": expected fields id, text, toxic");
        Document d;
        d.id = j["id"].get<std::uint64_t>();
        d.text = j["text"].get<std::string>();
        d.toxic = parse_toxic_field(j, path, line);
        if (!seen.insert(d.id).second)
            throw ConfigError(path + " line " + std::to_string(line) + ": duplicate doc id " +
                              std::to_string(d.id));
        out.push_back(std::move(d));
    });
    return out;
}

std::string documents_to_jsonl(const std::vector<Document>& docs) {
    std::string out;
    for (const auto& d : docs) {
        nlohmann::json j{{"id", d.id}, {"text", d.text}, {"toxic", d.toxic}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

} // namespace ragfair
