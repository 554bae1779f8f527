#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ragfair/flatindex.hpp"
#include "ragfair/vecmath.hpp"

namespace ragfair {

enum class HammingMode { rank, matched };

std::string to_string(HammingMode mode);
HammingMode hamming_mode_from_string(const std::string& name); // ConfigError

// Robustness bands from the score interpretation table.
enum class RobustnessBand { perfectly_stable, high, moderate, low };

std::string to_string(RobustnessBand band);

struct RrsThresholds {
    double t1 = 0.63;
    double t2 = 1.31;

    void validate() const; // requires 0 < t1 < t2 < 3
};

// Score decomposition for one original/perturbed retrieval pair.
// score = mean_dist + hamming, so score lives in [0, 3].
struct RrsBreakdown {
    double mean_dist = 0.0;
    double hamming = 0.0;
    double score = 0.0;
    Metric metric = Metric::euclidean;
    std::size_t k = 0;
};

// (1/k) * sum of matrix entries selected by the assignment.
double mean_dist(const DistanceMatrix& m, const Assignment& s);

// Fraction of rank positions whose label changed. Lists must be rank-ordered
// and equally sized (k >= 1).
double hamming_drift(const std::vector<bool>& labels, const std::vector<bool>& labels_perturbed);

// Full score: distance matrix between the two retrieved embedding sets,
// optimal bipartite matching, matched-distance mean, plus label drift.
// Vectors must be the retrieved documents' embeddings in rank order.
RrsBreakdown rrs_score(const RetrievalResult& orig, const RetrievalResult& pert,
                       std::span<const UnitVector> orig_vecs,
                       std::span<const UnitVector> pert_vecs, Metric metric,
                       HammingMode mode = HammingMode::rank);

// Band boundaries are inclusive on the left category: 0 is perfectly stable,
// (0, t1] high, (t1, t2] moderate, above t2 low.
RobustnessBand classify_score(double score, const RrsThresholds& thresholds = {});

} // namespace ragfair
