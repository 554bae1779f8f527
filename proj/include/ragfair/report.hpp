#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragfair/analysis.hpp"
#include "ragfair/mrt.hpp"
#include "ragfair/ratio.hpp"
#include "ragfair/rrs.hpp"

namespace ragfair {

// Everything derived from the trial records. Retrieval ASR counts all included
// trials; generation ASR excludes unparsed-label trials from both numerator
// and denominator, with the exclusion count reported.
struct AggregateBlock {
    std::uint64_t trials_total = 0;
    std::uint64_t trials_included = 0;
    std::uint64_t trials_excluded = 0;
    std::uint64_t unparsed_trials = 0;
    Ratio retrieval_asr;
    std::optional<Ratio> generation_asr; // absent when every included trial is unparsed
    QuartileSummary score_quartiles;
    std::array<std::uint64_t, 4> band_histogram{}; // perfectly_stable, high, moderate, low
    std::optional<ThresholdReport> threshold;
    std::string threshold_note;
    CategoryBreakdown retrieval_categories;
    CategoryBreakdown generation_categories;
};

// InsufficientDataError when no trial is included.
AggregateBlock compute_aggregates(const std::vector<TrialRecord>& trials,
                                  const RrsThresholds& thresholds);

struct RunReport {
    std::string timestamp; // RFC3339 UTC; excluded from the canonical form
    nlohmann::json config_echo;
    std::string lexicon_hash;
    std::string template_text;
    std::string system_prompt;
    std::string quantile_convention;
    std::string threshold_rule;
    bool offline = false;
    bool run_failed = false;
    RrsThresholds rrs_thresholds;
    std::vector<TrialRecord> trials; // sorted by pair_id
    std::optional<AggregateBlock> aggregates;
    std::string canonical_hash; // sha256 of the canonical JSON minus timestamp/hash
};

enum class ReportFormat { json, csv, markdown };

ReportFormat report_format_from_string(const std::string& name); // ConfigError

// Canonical JSON: keys sorted, floats printed with 17 significant digits,
// percentages carried as pre-rendered 2-decimal strings. Two emissions of the
// same report are byte-identical.
std::string canonical_json(const nlohmann::json& j);

nlohmann::json trial_to_json(const TrialRecord& trial);
TrialRecord trial_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const RunReport& report);
RunReport parse_report_json(const std::string& bytes); // ConfigError on malformed input

// Fills report.canonical_hash from the canonical bytes with timestamp and the
// hash field itself excluded.
void seal_report(RunReport& report);

std::string emit_report(const RunReport& report, ReportFormat format);

// Recomputes every aggregate from the embedded trials and compares with the
// stored block byte-for-byte in canonical form.
bool verify_report(const RunReport& report, std::string* diagnostic = nullptr);

} // namespace ragfair
