#include "ragfair/rrs.hpp"

#include "ragfair/errors.hpp"

namespace ragfair {

std::string to_string(HammingMode mode) {
    return mode == HammingMode::rank ? "rank" : "matched";
}

HammingMode hamming_mode_from_string(const std::string& name) {
    if (name == "rank")
        return HammingMode::rank;
    if (name == "matched")
        return HammingMode::matched;
    throw ConfigError("unknown hamming mode '" + name + "' (expected rank or matched)");
}

std::string to_string(RobustnessBand band) {
    switch (band) {
        case RobustnessBand::perfectly_stable: return "perfectly_stable";
        case RobustnessBand::high: return "high";
        case RobustnessBand::moderate: return "moderate";
        case RobustnessBand::low: return "low";
    }
    return "low";
}

void RrsThresholds::validate() const {
    if (!(0.0 < t1 && t1 < t2 && t2 < 3.0))
        throw ConfigError("robustness thresholds must satisfy 0 < t1 < t2 < 3");
}

double mean_dist(const DistanceMatrix& m, const Assignment& s) {
    if (s.pairs.size() != m.k)
        throw ArgumentError("assignment size does not match matrix");
    double sum = 0.0;
    for (const auto& [row, col] : s.pairs) {
        if (row >= m.k || col >= m.k)
            throw ArgumentError("assignment index out of range");
        sum += m.at(row, col);
    }
    return sum / static_cast<double>(m.k);
}

double hamming_drift(const std::vector<bool>& labels,
                     const std::vector<bool>& labels_perturbed) {
    if (labels.empty())
        throw ArgumentError("hamming_drift: empty label lists");
    if (labels.size() != labels_perturbed.size())
        throw ArgumentError("hamming_drift: length mismatch");
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        mismatches += labels[i] != labels_perturbed[i] ? 1 : 0;
    return static_cast<double>(mismatches) / static_cast<double>(labels.size());
}

RrsBreakdown rrs_score(const RetrievalResult& orig, const RetrievalResult& pert,
                       std::span<const UnitVector> orig_vecs,
                       std::span<const UnitVector> pert_vecs, Metric metric,
                       HammingMode mode) {
    const std::size_t k = orig.entries.size();
    if (k == 0)
        throw ArgumentError("rrs_score: empty retrieval");
    if (pert.entries.size() != k || orig_vecs.size() != k || pert_vecs.size() != k)
        throw ArgumentError("rrs_score: retrievals and embedding lists must share length k");

    const DistanceMatrix m = distance_matrix(orig_vecs, pert_vecs, metric);
    const Assignment s = optimal_assignment(m);

    RrsBreakdown out;
    out.metric = metric;
    out.k = k;
    out.mean_dist = mean_dist(m, s);

    if (mode == HammingMode::rank) {
        out.hamming = hamming_drift(orig.toxic_labels(), pert.toxic_labels());
    } else {
        std::size_t mismatches = 0;
        for (const auto& [row, col] : s.pairs)
            mismatches += orig.entries[row].toxic != pert.entries[col].toxic ? 1 : 0;
        out.hamming = static_cast<double>(mismatches) / static_cast<double>(k);
    }
    out.score = out.mean_dist + out.hamming;
    return out;
}

RobustnessBand classify_score(double score, const RrsThresholds& thresholds) {
    thresholds.validate();
    if (score < 0.0 || score > 3.0)
        throw ArgumentError("score outside [0, 3]");
    if (score == 0.0)
        return RobustnessBand::perfectly_stable;
    if (score <= thresholds.t1)
        return RobustnessBand::high;
    if (score <= thresholds.t2)
        return RobustnessBand::moderate;
    return RobustnessBand::low;
}

} // namespace ragfair
