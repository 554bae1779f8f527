#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ragfair/corpus.hpp"
#include "ragfair/vecmath.hpp"

namespace ragfair {

struct RetrievedDoc {
    std::uint64_t doc_id = 0;
    double score = 0.0; // inner product = cosine similarity on unit vectors
    bool toxic = false;
};

// Ranked top-k hits: scores non-increasing, ties by ascending doc id.
struct RetrievalResult {
    std::vector<RetrievedDoc> entries;

    std::size_t toxic_count() const;
    std::vector<bool> toxic_labels() const;
};

// Exact inner-product index: a flat scan over unit-norm document embeddings.
// Immutable once built; concurrent searches need no synchronization.
class VectorIndex {
public:
    static VectorIndex build(const std::vector<Document>& docs,
                             const std::vector<UnitVector>& embeddings);

    std::size_t size() const { return doc_ids_.size(); }
    std::size_t dim() const { return dim_; }

    RetrievalResult search(const UnitVector& query, std::size_t k) const;

    const UnitVector& vector_at(std::size_t pos) const { return vectors_[pos]; }
    std::uint64_t doc_id_at(std::size_t pos) const { return doc_ids_[pos]; }
    bool toxic_at(std::size_t pos) const { return labels_[pos] != 0; }
    std::optional<std::size_t> position_of(std::uint64_t doc_id) const;

    // Binary file: magic "RGFX", version u32, n u64, dim u32, then row-major
    // f64 vectors, doc ids (u64), labels (u8), all little-endian.
    void save(const std::string& path) const;
    static VectorIndex load(const std::string& path);

private:
    VectorIndex() = default;

    std::size_t dim_ = 0;
    std::vector<UnitVector> vectors_;
    std::vector<std::uint64_t> doc_ids_;
    std::vector<std::uint8_t> labels_;
    std::unordered_map<std::uint64_t, std::size_t> by_id_;
};

} // namespace ragfair
