#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ragfair {

// One searchable corpus entry.
struct Document {
    std::uint64_t id = 0;
    std::string text;
    bool toxic = false;
};

enum class TokenCounter { whitespace, external };

struct CleaningConfig {
    double iqr_multiplier = 1.5;
    std::size_t min_chars = 10;
    TokenCounter token_counter = TokenCounter::whitespace;
    // Hook for plugging in a real tokenizer; required when token_counter is
    // external, otherwise ignored.
    std::function<std::size_t(const std::string&)> external_counter;

    void validate() const; // ConfigError on bad multiplier / min_chars
};

// Number of maximal non-whitespace runs for the whitespace counter; delegates
// to the hook for the external counter (ConfigError when the hook is absent).
std::size_t count_tokens(const std::string& text, const CleaningConfig& cfg);

// Outlier window [Q1 - m*(Q3-Q1), Q3 + m*(Q3-Q1)] using the shared
// linear-interpolation quantile rule. Empty input raises ArgumentError.
std::pair<double, double> iqr_bounds(const std::vector<std::size_t>& counts,
                                     double iqr_multiplier);

// Strips @-mentions and URL tokens, lowercases ASCII, collapses whitespace
// runs, trims. Returns nullopt when the result is shorter than min_chars.
std::optional<std::string> clean_text(const std::string& raw, const CleaningConfig& cfg);

// Full preprocessing pass: clean every entry, then drop token-count outliers
// of the surviving texts. Ids are assigned 0..n-1 in input order.
std::vector<Document> clean_corpus(const std::vector<std::pair<std::string, bool>>& raw_docs,
                                   const CleaningConfig& cfg);

// Order-stable uniform sample without replacement of round(fraction * n) docs,
// re-numbered 0..m-1. fraction in (0, 1].
std::vector<Document> sample_corpus(const std::vector<Document>& docs, double fraction,
                                    std::uint64_t seed);

// JSONL I/O. Input lines need `text` and `toxic` (bool or 0/1); cleaned files
// carry `id` as well.
std::vector<std::pair<std::string, bool>> load_raw_corpus(const std::string& path);
std::vector<Document> load_documents(const std::string& path);
std::string documents_to_jsonl(const std::vector<Document>& docs);

} // namespace ragfair
