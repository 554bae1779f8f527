#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ragfair/mrt.hpp"
#include "ragfair/ratio.hpp"

namespace ragfair {

// The one quantile convention used across the whole harness, printed in every
// report: linear interpolation between closest ranks of the sorted list,
// position p = q * (n - 1).
extern const char* const kQuantileConvention;

double quantile(std::vector<double> values, double q); // ArgumentError on empty / bad q

struct QuartileSummary {
    double q1 = 0.0;
    double q2 = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    std::uint64_t n = 0;

    static QuartileSummary from_values(const std::vector<double>& values);

    bool operator==(const QuartileSummary&) const = default;
};

// d_th = Q3 of MeanDist among pairs whose sentiment did not flip. Trials with
// unparsed labels belong to neither group and are skipped, like in the ASR.
struct ThresholdReport {
    double d_th = 0.0;
    std::uint64_t n_flip = 0;
    std::uint64_t n_noflip = 0;
    std::optional<QuartileSummary> quartiles_flip; // absent when nothing flipped
    QuartileSummary quartiles_noflip;
};

// InsufficientDataError when the no-flip group is empty.
ThresholdReport derive_threshold(const std::vector<TrialRecord>& records);

enum class PairStability { robust, degraded };

std::string to_string(PairStability s);

// Inclusive boundary: mean_dist <= d_th predicts robust.
PairStability classify_pair(double mean_dist, double d_th);

enum class VerdictField { retrieval, generation };

struct CategoryShare {
    std::uint64_t violations = 0;
    Ratio share; // of all violations; 0/1 under the zero-total flag

    bool operator==(const CategoryShare&) const = default;
};

struct CategoryBreakdown {
    std::map<Category, CategoryShare> per_category;
    std::uint64_t total_violations = 0;
    bool zero_total = false;

    bool operator==(const CategoryBreakdown&) const = default;
};

// Violation counts per demographic category for the chosen verdict. Generation
// verdicts skip unparsed-label trials so the counts sum to the ASR numerator.
CategoryBreakdown category_breakdown(const std::vector<TrialRecord>& records,
                                     VerdictField field);

} // namespace ragfair
