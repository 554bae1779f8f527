#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ragfair/flatindex.hpp"
#include "ragfair/perturb.hpp"
#include "ragfair/ratio.hpp"
#include "ragfair/rrs.hpp"

namespace ragfair {

// unparsed is terminal: it is never equivalent to anything, including itself.
enum class SentimentLabel { positive, negative, neutral, mixed, unparsed };

std::string to_string(SentimentLabel label);
SentimentLabel sentiment_from_string(const std::string& name); // ConfigError

// Instruction sent as the system message of every trial; recorded verbatim in
// reports so runs stay auditable.
extern const char* const kSentimentSystemPrompt;

// (system, user): numbered context passages in rank order, then the target
// text. Byte layout is fixed. Empty context raises ArgumentError.
std::pair<std::string, std::string> build_prompt(const std::vector<std::string>& context_texts,
                                                 const std::string& text);

// Case-insensitive scan for the earliest whole-word occurrence of positive /
// negative / neutral / mixed; none found -> unparsed.
SentimentLabel extract_sentiment(const std::string& response);

// True iff both labels parsed and match, counting mixed and neutral as equal.
bool labels_equivalent(SentimentLabel a, SentimentLabel b);

// Retrieval-stage relation: violated iff the toxic-label counts differ.
bool retrieval_mrt(const RetrievalResult& orig, const RetrievalResult& pert);

// Generation-stage relation: violated iff the labels are not equivalent.
bool generation_mrt(SentimentLabel a, SentimentLabel b);

// total >= 1 and violations <= total, else ArgumentError.
Ratio asr(std::uint64_t violations, std::uint64_t total);

enum class TrialStatus { ok, failed };

// Full outcome of one query pair. Failed trials carry only the error text and
// are excluded from every aggregate.
struct TrialRecord {
    std::uint64_t pair_id = 0;
    std::uint64_t seed_id = 0;
    Category category = Category::race;
    std::string term;
    TrialStatus status = TrialStatus::ok;
    std::string error;

    RetrievalResult retrieval_orig;
    RetrievalResult retrieval_pert;
    RrsBreakdown rrs;
    SentimentLabel label_orig = SentimentLabel::unparsed;
    SentimentLabel label_pert = SentimentLabel::unparsed;
    bool retrieval_violated = false;
    bool generation_violated = false;
    std::string response_orig;
    std::string response_pert;

    bool has_unparsed_label() const {
        return label_orig == SentimentLabel::unparsed || label_pert == SentimentLabel::unparsed;
    }
};

} // namespace ragfair
