#include "ragfair/flatindex.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <queue>

#include "ragfair/errors.hpp"

namespace ragfair {
namespace {

constexpr char kMagic[4] = {'R', 'G', 'F', 'X'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            throw IoError("index file truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= std::uint64_t(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
};

// Heap ordering: the worst current hit sits on top. "Better" means higher
// score, then lower doc id.
struct WorseOnTop {
    bool operator()(const RetrievedDoc& a, const RetrievedDoc& b) const {
        if (a.score != b.score)
            return a.score > b.score;
        return a.doc_id < b.doc_id;
    }
};

} // namespace

std::size_t RetrievalResult::toxic_count() const {
    std::size_t n = 0;
    for (const auto& e : entries)
        n += e.toxic ? 1 : 0;
    return n;
}

std::vector<bool> RetrievalResult::toxic_labels() const {
    std::vector<bool> labels;
    labels.reserve(entries.size());
    for (const auto& e : entries)
        labels.push_back(e.toxic);
    return labels;
}

VectorIndex VectorIndex::build(const std::vector<Document>& docs,
                               const std::vector<UnitVector>& embeddings) {
    if (docs.empty())
        throw ArgumentError("build: empty corpus");
    if (docs.size() != embeddings.size())
        throw ArgumentError("build: " + std::to_string(docs.size()) + " docs vs " +
                            std::to_string(embeddings.size()) + " embeddings");
    VectorIndex index;
    index.dim_ = embeddings.front().dim();
    index.vectors_.reserve(docs.size());
    index.doc_ids_.reserve(docs.size());
    index.labels_.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (embeddings[i].dim() != index.dim_)
            throw ArgumentError("build: embedding dimension mismatch at position " +
                                std::to_string(i));
        if (!index.by_id_.emplace(docs[i].id, i).second)
            throw ArgumentError("build: duplicate doc id " + std::to_string(docs[i].id));
        index.vectors_.push_back(embeddings[i]);
        index.doc_ids_.push_back(docs[i].id);
        index.labels_.push_back(docs[i].toxic ? 1 : 0);
    }
    return index;
}

RetrievalResult VectorIndex::search(const UnitVector& query, std::size_t k) const {
    if (k < 1)
        throw ArgumentError("search: k must be >= 1");
    if (k > size())
        throw ArgumentError("search: k=" + std::to_string(k) + " exceeds index size " +
                            std::to_string(size()));
    if (query.dim() != dim_)
        throw ArgumentError("search: query dimension " + std::to_string(query.dim()) +
                            " vs index dimension " + std::to_string(dim_));

    std::priority_queue<RetrievedDoc, std::vector<RetrievedDoc>, WorseOnTop> heap;
    for (std::size_t pos = 0; pos < size(); ++pos) {
        RetrievedDoc cand{doc_ids_[pos], query.dot(vectors_[pos]), labels_[pos] != 0};
        if (heap.size() < k) {
            heap.push(cand);
            continue;
        }
        const RetrievedDoc& worst = heap.top();
        const bool better = cand.score > worst.score ||
                            (cand.score == worst.score && cand.doc_id < worst.doc_id);
        if (better) {
            heap.pop();
            heap.push(cand);
        }
    }

    RetrievalResult result;
    result.entries.resize(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
        result.entries[i] = heap.top();
        heap.pop();
    }
    return result;
}

std::optional<std::size_t> VectorIndex::position_of(std::uint64_t doc_id) const {
    const auto it = by_id_.find(doc_id);
    if (it == by_id_.end())
        return std::nullopt;
    return it->second;
}

void VectorIndex::save(const std::string& path) const {
    std::string bytes;
    bytes.reserve(16 + size() * (dim_ * 8 + 9));
    bytes.append(kMagic, 4);
    put_u32(bytes, kVersion);
    put_u64(bytes, size());
    put_u32(bytes, static_cast<std::uint32_t>(dim_));
    for (const auto& v : vectors_)
        for (double c : v.components())
            put_f64(bytes, c);
    for (std::uint64_t id : doc_ids_)
        put_u64(bytes, id);
    for (std::uint8_t label : labels_)
        bytes += static_cast<char>(label);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("short write to " + path);
}

VectorIndex VectorIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Reader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw IoError(path + ": not an index file (bad magic)");
    r.pos = 4;
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw IoError(path + ": unsupported index version " + std::to_string(version));
    const std::uint64_t n = r.u64();
    const std::uint32_t dim = r.u32();
    if (n == 0 || dim == 0)
        throw IoError(path + ": empty index");

    VectorIndex index;
    index.dim_ = dim;
    index.vectors_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::vector<double> comps(dim);
        for (std::uint32_t d = 0; d < dim; ++d)
            comps[d] = r.f64();
        try {
            index.vectors_.push_back(UnitVector::from_normalized(std::move(comps)));
        } catch (const ArgumentError& err) {
            throw IoError(path + ": corrupt vector at row " + std::to_string(i) + ": " +
                          err.what());
        }
    }
    index.doc_ids_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        index.doc_ids_.push_back(r.u64());
    index.labels_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        index.labels_.push_back(r.u8());
    if (r.pos != bytes.size())
        throw IoError(path + ": trailing bytes after index payload");

    for (std::size_t i = 0; i < index.doc_ids_.size(); ++i)
        if (!index.by_id_.emplace(index.doc_ids_[i], i).second)
            throw IoError(path + ": duplicate doc id " + std::to_string(index.doc_ids_[i]));
    return index;
}

} // namespace ragfair
