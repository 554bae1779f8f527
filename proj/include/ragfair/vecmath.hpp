#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ragfair {

enum class Metric { euclidean, cosine };

std::string to_string(Metric metric);
Metric metric_from_string(const std::string& name); // ConfigError on unknown name

// Embedding vector holding 64-bit components with unit L2 norm
// (|norm - 1| <= 1e-9). Construct through normalize() or from_normalized().
class UnitVector {
public:
    static constexpr double kNormTolerance = 1e-9;

    // Validates the unit-norm invariant; ArgumentError otherwise.
    static UnitVector from_normalized(std::vector<double> components);

    const std::vector<double>& components() const { return components_; }
    std::size_t dim() const { return components_.size(); }
    double operator[](std::size_t i) const { return components_[i]; }

    // Raw inner product; ArgumentError on dimension mismatch.
    double dot(const UnitVector& other) const;

    UnitVector negated() const;

    bool operator==(const UnitVector&) const = default;

private:
    explicit UnitVector(std::vector<double> components)
        : components_(std::move(components)) {}

    std::vector<double> components_;
};

// Scales v to unit norm. Norms below 1e-12 raise ArgumentError (degenerate vector).
UnitVector normalize(const std::vector<double>& v);

// Euclidean distance between unit vectors, clamped to [0, 2]. Computed as the
// norm of the componentwise difference, which is exact for identical inputs;
// on unit vectors it equals sqrt(2 - 2 * dot).
double dist_euclidean(const UnitVector& u, const UnitVector& v);

// Cosine distance 1 - dot, with the dot product clamped to [-1, 1]. Range [0, 2].
double dist_cosine(const UnitVector& u, const UnitVector& v);

// Square grid of pairwise distances between two equally sized vector lists.
struct DistanceMatrix {
    std::size_t k = 0;
    Metric metric = Metric::euclidean;
    std::vector<double> values; // row-major k*k

    double at(std::size_t row, std::size_t col) const { return values[row * k + col]; }
};

DistanceMatrix distance_matrix(std::span<const UnitVector> left,
                               std::span<const UnitVector> right,
                               Metric metric);

// Minimum-cost perfect matching over a square cost matrix.
struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs; // sorted by row
    double total_cost = 0.0;
};

// Hungarian solver with a fixed tie-break: among minimum-cost matchings the
// lexicographically smallest sorted pair list wins, so runs are reproducible.
// Non-finite entries raise ArgumentError.
Assignment optimal_assignment(const DistanceMatrix& m);

} // namespace ragfair
