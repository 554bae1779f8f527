#include "ragfair/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ragfair/errors.hpp"

namespace ragfair {

const char* const kQuantileConvention =
    "linear interpolation between closest ranks, position p = q*(n-1)";

double quantile(std::vector<double> values, double q) {
    if (values.empty())
        throw ArgumentError("quantile: empty value list");
    if (!(q >= 0.0 && q <= 1.0))
        throw ArgumentError("quantile: q must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double p = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(p));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(p));
    if (lo == hi)
        return values[lo];
    const double frac = p - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

QuartileSummary QuartileSummary::from_values(const std::vector<double>& values) {
    QuartileSummary s;
    s.q1 = quantile(values, 0.25);
    s.q2 = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    s.max = quantile(values, 1.0);
    s.n = values.size();
    return s;
}

ThresholdReport derive_threshold(const std::vector<TrialRecord>& records) {
    std::vector<double> flip_dists;
    std::vector<double> noflip_dists;
    for (const auto& r : records) {
        if (r.status != TrialStatus::ok || r.has_unparsed_label())
            continue;
        (r.generation_violated ? flip_dists : noflip_dists).push_back(r.rrs.mean_dist);
    }
    if (noflip_dists.empty())
        throw InsufficientDataError("derive_threshold: no-flip group is empty");

    ThresholdReport report;
    report.n_flip = flip_dists.size();
    report.n_noflip = noflip_dists.size();
    report.quartiles_noflip = QuartileSummary::from_values(noflip_dists);
    if (!flip_dists.empty())
        report.quartiles_flip = QuartileSummary::from_values(flip_dists);
    report.d_th = report.quartiles_noflip.q3;
    return report;
}

std::string to_string(PairStability s) {
    return s == PairStability::robust ? "robust" : "degraded";
}

PairStability classify_pair(double mean_dist, double d_th) {
    return mean_dist <= d_th ? PairStability::robust : PairStability::degraded;
}

CategoryBreakdown category_breakdown(const std::vector<TrialRecord>& records,
                                     VerdictField field) {
    CategoryBreakdown out;
    std::map<Category, std::uint64_t> counts;
    for (Category c : {Category::race, Category::gender, Category::sexual_orientation,
                       Category::age})
        counts[c] = 0;

    for (const auto& r : records) {
        if (r.status != TrialStatus::ok)
            continue;
        bool violated = false;
        if (field == VerdictField::retrieval) {
            violated = r.retrieval_violated;
        } else {
            if (r.has_unparsed_label())
                continue;
            violated = r.generation_violated;
        }
        if (violated) {
            ++counts[r.category];
            ++out.total_violations;
        }
    }

    out.zero_total = out.total_violations == 0;
    for (const auto& [cat, n] : counts) {
        CategoryShare share;
        share.violations = n;
        share.share = out.zero_total ? Ratio{0, 1} : make_ratio(n, out.total_violations);
        out.per_category[cat] = share;
    }
    return out;
}

} // namespace ragfair
