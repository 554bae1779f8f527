#include "ragfair/vecmath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ragfair/errors.hpp"

namespace ragfair {
namespace {

constexpr double kDegenerateNorm = 1e-12;

// Kuhn-Munkres with row/column potentials, O(n^3). Returns the minimum total
// cost; optionally reports the matching it found (any optimal one).
double hungarian_min_cost(const std::vector<double>& cost, std::size_t n,
                          std::vector<std::size_t>* row_to_col = nullptr) {
    if (n == 0)
        return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            std::size_t j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    if (row_to_col)
        row_to_col->assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] == 0)
            continue;
        if (row_to_col)
            (*row_to_col)[p[j] - 1] = j - 1;
        total += cost[(p[j] - 1) * n + (j - 1)];
    }
    return total;
}

// Minimum cost over the submatrix formed by rows [first_row, k) and the given
// column subset.
double best_completion(const DistanceMatrix& m, std::size_t first_row,
                       const std::vector<std::size_t>& cols) {
    const std::size_t sub = cols.size();
    if (sub == 0)
        return 0.0;
    std::vector<double> cost(sub * sub);
    for (std::size_t r = 0; r < sub; ++r)
        for (std::size_t c = 0; c < sub; ++c)
            cost[r * sub + c] = m.at(first_row + r, cols[c]);
    return hungarian_min_cost(cost, sub);
}

} // namespace

std::string to_string(Metric metric) {
    return metric == Metric::euclidean ? "euclidean" : "cosine";
}

Metric metric_from_string(const std::string& name) {
    if (name == "euclidean")
        return Metric::euclidean;
    if (name == "cosine")
        return Metric::cosine;
    throw ConfigError("unknown metric '" + name + "' (expected euclidean or cosine)");
}

UnitVector UnitVector::from_normalized(std::vector<double> components) {
    double sq = 0.0;
    for (double c : components)
        sq += c * c;
    const double norm = std::sqrt(sq);
    if (std::abs(norm - 1.0) > kNormTolerance)
        throw ArgumentError("vector is not unit-norm (norm=" + std::to_string(norm) + ")");
    return UnitVector(std::move(components));
}

double UnitVector::dot(const UnitVector& other) const {
    if (dim() != other.dim())
        throw ArgumentError("dimension mismatch: " + std::to_string(dim()) + " vs " +
                            std::to_string(other.dim()));
    double acc = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i)
        acc += components_[i] * other.components_[i];
    return acc;
}

UnitVector UnitVector::negated() const {
    std::vector<double> flipped(components_.size());
    for (std::size_t i = 0; i < components_.size(); ++i)
        flipped[i] = -components_[i];
    return UnitVector(std::move(flipped));
}

UnitVector normalize(const std::vector<double>& v) {
    double sq = 0.0;
    for (double c : v)
        sq += c * c;
    const double norm = std::sqrt(sq);
    if (!(norm > kDegenerateNorm))
        throw ArgumentError("degenerate vector: norm below 1e-12");
    std::vector<double> scaled(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        scaled[i] = v[i] / norm;
    return UnitVector::from_normalized(std::move(scaled));
}

double dist_euclidean(const UnitVector& u, const UnitVector& v) {
    if (u.dim() != v.dim())
        throw ArgumentError("dimension mismatch in dist_euclidean");
    double sq = 0.0;
    for (std::size_t i = 0; i < u.dim(); ++i) {
        const double d = u[i] - v[i];
        sq += d * d;
    }
    return std::clamp(std::sqrt(sq), 0.0, 2.0);
}

double dist_cosine(const UnitVector& u, const UnitVector& v) {
    const double d = std::clamp(u.dot(v), -1.0, 1.0);
    return 1.0 - d;
}

DistanceMatrix distance_matrix(std::span<const UnitVector> left,
                               std::span<const UnitVector> right,
                               Metric metric) {
    if (left.size() != right.size())
        throw ArgumentError("distance_matrix requires equally sized lists");
    if (left.empty())
        throw ArgumentError("distance_matrix requires k >= 1");
    DistanceMatrix m;
    m.k = left.size();
    m.metric = metric;
    m.values.resize(m.k * m.k);
    for (std::size_t i = 0; i < m.k; ++i)
        for (std::size_t j = 0; j < m.k; ++j)
            m.values[i * m.k + j] = metric == Metric::euclidean
                                        ? dist_euclidean(left[i], right[j])
                                        : dist_cosine(left[i], right[j]);
    return m;
}

Assignment optimal_assignment(const DistanceMatrix& m) {
    const std::size_t k = m.k;
    if (k == 0 || m.values.size() != k * k)
        throw ArgumentError("optimal_assignment requires a non-empty square matrix");
    for (double v : m.values)
        if (!std::isfinite(v))
            throw ArgumentError("optimal_assignment: non-finite cost entry");

    const double optimum = hungarian_min_cost(m.values, k);

    // Fix columns row by row, keeping only choices that still complete to the
    // optimal total. Ascending column order yields the lexicographically
    // smallest optimal matching.
    const double tie_tol = 1e-12;
    std::vector<std::size_t> available(k);
    for (std::size_t c = 0; c < k; ++c)
        available[c] = c;

    Assignment out;
    out.pairs.reserve(k);
    double fixed = 0.0;
    for (std::size_t row = 0; row < k; ++row) {
        std::size_t pick = available.size();
        double best_bound = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t idx = 0; idx < available.size(); ++idx) {
            std::vector<std::size_t> rest_cols;
            rest_cols.reserve(available.size() - 1);
            for (std::size_t other = 0; other < available.size(); ++other)
                if (other != idx)
                    rest_cols.push_back(available[other]);
            const double bound =
                fixed + m.at(row, available[idx]) + best_completion(m, row + 1, rest_cols);
            if (bound <= optimum + tie_tol) {
                pick = idx;
                break;
            }
            if (bound < best_bound) {
                best_bound = bound;
                best_idx = idx;
            }
        }
        if (pick == available.size())
            pick = best_idx; // float noise pushed every bound past tolerance
        const std::size_t col = available[pick];
        out.pairs.emplace_back(row, col);
        fixed += m.at(row, col);
        available.erase(available.begin() + static_cast<std::ptrdiff_t>(pick));
    }

    out.total_cost = 0.0;
    for (const auto& [r, c] : out.pairs)
        out.total_cost += m.at(r, c);
    return out;
}

} // namespace ragfair
