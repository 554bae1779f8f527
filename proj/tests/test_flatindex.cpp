#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "ragfair/errors.hpp"
#include "ragfair/flatindex.hpp"

using namespace ragfair;

namespace {

std::vector<Document> make_docs(std::size_t n) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i)
        docs.push_back({i, "doc " + std::to_string(i), i % 3 == 0});
    return docs;
}

} // namespace

TEST_CASE("build validations") {
    const std::vector<UnitVector> basis{normalize({1.0, 0.0, 0.0, 0.0}),
                                        normalize({0.0, 1.0, 0.0, 0.0}),
                                        normalize({0.0, 0.0, 1.0, 0.0})};
    const auto index = VectorIndex::build(make_docs(3), basis);
    CHECK(index.size() == 3);
    CHECK(index.dim() == 4);

    CHECK_THROWS_AS(VectorIndex::build(make_docs(2), basis), ArgumentError);
    CHECK_THROWS_AS(VectorIndex::build({}, {}), ArgumentError);

    auto dup = make_docs(3);
    dup[2].id = dup[0].id;
    CHECK_THROWS_AS(VectorIndex::build(dup, basis), ArgumentError);

    std::vector<UnitVector> ragged{normalize({1.0, 0.0, 0.0, 0.0}), normalize({0.0, 1.0}),
                                   normalize({0.0, 0.0, 1.0, 0.0})};
    CHECK_THROWS_AS(VectorIndex::build(make_docs(3), ragged), ArgumentError);
}

TEST_CASE("search on an orthonormal corpus") {
    const std::vector<UnitVector> basis{normalize({1.0, 0.0, 0.0}), normalize({0.0, 1.0, 0.0}),
                                        normalize({0.0, 0.0, 1.0})};
    const auto index = VectorIndex::build(make_docs(3), basis);

    const auto hit = index.search(normalize({0.0, 1.0, 0.0}), 1);
    REQUIRE(hit.entries.size() == 1);
    CHECK(hit.entries[0].doc_id == 1);
    CHECK(hit.entries[0].score == doctest::Approx(1.0).epsilon(1e-12));

    // equidistant from docs 0 and 1 -> ascending doc_id on the tie
    const auto tie = index.search(normalize({1.0, 1.0, 0.0}), 2);
    REQUIRE(tie.entries.size() == 2);
    CHECK(tie.entries[0].doc_id == 0);
    CHECK(tie.entries[1].doc_id == 1);
    CHECK(tie.entries[0].score == tie.entries[1].score);

    CHECK_THROWS_AS(index.search(normalize({1.0, 0.0, 0.0}), 4), ArgumentError);
    CHECK_THROWS_AS(index.search(normalize({1.0, 0.0, 0.0}), 0), ArgumentError);
    CHECK_THROWS_AS(index.search(normalize({1.0, 0.0}), 1), ArgumentError);
}

TEST_CASE("search equals the scan-sort oracle on random corpora") {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<std::size_t> n_of(12, 300);
    std::uniform_int_distribution<std::size_t> dim_of(2, 48);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = n_of(rng);
        const std::size_t dim = dim_of(rng);
        std::vector<UnitVector> vectors;
        std::vector<std::uint64_t> ids;
        std::vector<Document> docs;
        for (std::size_t i = 0; i < n; ++i) {
            vectors.push_back(oracles::random_unit_vector(rng, dim));
            ids.push_back(i);
            docs.push_back({i, "t" + std::to_string(i), false});
        }
        const auto index = VectorIndex::build(docs, vectors);
        const UnitVector query = oracles::random_unit_vector(rng, dim);
        for (std::size_t k : {std::size_t{1}, std::size_t{4}, std::size_t{10}}) {
            const auto got = index.search(query, k);
            const auto want = oracles::scan_sort_topk(vectors, ids, query, k);
            REQUIRE(got.entries.size() == k);
            for (std::size_t i = 0; i < k; ++i) {
                CHECK(got.entries[i].doc_id == want[i].doc_id);
                CHECK(got.entries[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("inner-product ranking matches ascending distance ranking") {
    std::mt19937_64 rng(43);
    std::vector<UnitVector> vectors;
    std::vector<Document> docs;
    for (std::size_t i = 0; i < 60; ++i) {
        vectors.push_back(oracles::random_unit_vector(rng, 16));
        docs.push_back({i, "d" + std::to_string(i), false});
    }
    const auto index = VectorIndex::build(docs, vectors);
    const UnitVector query = oracles::random_unit_vector(rng, 16);
    const auto result = index.search(query, 10);
    for (std::size_t i = 1; i < result.entries.size(); ++i) {
        const auto& prev = vectors[result.entries[i - 1].doc_id];
        const auto& cur = vectors[result.entries[i].doc_id];
        CHECK(dist_cosine(query, prev) <= dist_cosine(query, cur) + 1e-12);
        CHECK(dist_euclidean(query, prev) <= dist_euclidean(query, cur) + 1e-9);
    }
}

TEST_CASE("repeated searches are identical") {
    std::mt19937_64 rng(47);
    std::vector<UnitVector> vectors;
    std::vector<Document> docs;
    for (std::size_t i = 0; i < 100; ++i) {
        vectors.push_back(oracles::random_unit_vector(rng, 8));
        docs.push_back({i, "d", i % 2 == 0});
    }
    const auto index = VectorIndex::build(docs, vectors);
    const UnitVector query = oracles::random_unit_vector(rng, 8);
    const auto a = index.search(query, 7);
    const auto b = index.search(query, 7);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].doc_id == b.entries[i].doc_id);
        CHECK(a.entries[i].score == b.entries[i].score);
        CHECK(a.entries[i].toxic == b.entries[i].toxic);
    }
}

TEST_CASE("index file layout is pinned") {
    const std::vector<UnitVector> vecs{UnitVector::from_normalized({1.0, 0.0}),
                                       UnitVector::from_normalized({0.0, 1.0})};
    const std::vector<Document> docs{{7, "a", true}, {9, "b", false}};
    const auto index = VectorIndex::build(docs, vecs);
    const auto path = (std::filesystem::temp_directory_path() / "ragfair_layout.bin").string();
    index.save(path);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // magic, version u32 LE, n u64 LE, dim u32 LE
    REQUIRE(bytes.size() == 4 + 4 + 8 + 4 + 2 * 2 * 8 + 2 * 8 + 2);
    CHECK(bytes.substr(0, 4) == "RGFX");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[5]) == 0);
    CHECK(static_cast<unsigned char>(bytes[8]) == 2);  // n
    CHECK(static_cast<unsigned char>(bytes[16]) == 2); // dim
    // first vector component 1.0 -> IEEE-754 LE: 00..00 f0 3f
    CHECK(static_cast<unsigned char>(bytes[26]) == 0xf0);
    CHECK(static_cast<unsigned char>(bytes[27]) == 0x3f);
    // doc ids follow the vectors
    CHECK(static_cast<unsigned char>(bytes[20 + 32]) == 7);
    CHECK(static_cast<unsigned char>(bytes[20 + 32 + 8]) == 9);
    // labels close the file
    CHECK(static_cast<unsigned char>(bytes[bytes.size() - 2]) == 1);
    CHECK(static_cast<unsigned char>(bytes[bytes.size() - 1]) == 0);
}

TEST_CASE("index persistence round trip") {
    std::mt19937_64 rng(53);
    std::vector<UnitVector> vectors;
    std::vector<Document> docs;
    for (std::size_t i = 0; i < 25; ++i) {
        vectors.push_back(oracles::random_unit_vector(rng, 12));
        docs.push_back({i * 7 + 3, "d", i % 4 == 0});
    }
    const auto index = VectorIndex::build(docs, vectors);
    const auto path = (std::filesystem::temp_directory_path() / "ragfair_index.bin").string();
    index.save(path);

    const auto loaded = VectorIndex::load(path);
    CHECK(loaded.size() == index.size());
    CHECK(loaded.dim() == index.dim());
    const UnitVector query = oracles::random_unit_vector(rng, 12);
    const auto a = index.search(query, 5);
    const auto b = loaded.search(query, 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(a.entries[i].doc_id == b.entries[i].doc_id);
        CHECK(a.entries[i].score == b.entries[i].score);
        CHECK(a.entries[i].toxic == b.entries[i].toxic);
    }
    CHECK(loaded.position_of(3).has_value());
    CHECK_FALSE(loaded.position_of(999).has_value());

    // corrupted magic rejected
    std::string bytes;
    {
        std::ifstream in(path, std::ios::binary);
        bytes.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    bytes[0] = 'Z';
    const auto bad_path = (std::filesystem::temp_directory_path() / "ragfair_bad.bin").string();
    {
        std::ofstream out(bad_path, std::ios::binary);
        out << bytes;
    }
    CHECK_THROWS_AS(VectorIndex::load(bad_path), IoError);

    // truncated file rejected
    const auto trunc_path =
        (std::filesystem::temp_directory_path() / "ragfair_trunc.bin").string();
    {
        std::ofstream out(trunc_path, std::ios::binary);
        out << bytes.substr(0, bytes.size() / 2);
    }
    CHECK_THROWS_AS(VectorIndex::load(trunc_path), IoError);
}
