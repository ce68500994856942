#include <doctest.h>

#include <algorithm>
#include <random>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/eval/harness.hpp"
#include "bmet/vecstore/kernels.hpp"
#include "bmet/vecstore/segment.hpp"
#include "support.hpp"

using namespace bmet;
using namespace bmet::vecstore;

namespace {

embedding::EmbedderSpec spec_of(std::uint32_t dim) {
    embedding::EmbedderSpec s;
    s.dimension = dim;
    return s;
}

std::string id_of(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%05zu", i);
    return buf;
}

struct Corpus {
    std::size_t dim;
    std::vector<float> data;
    std::size_t n() const { return data.size() / dim; }
    std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

Corpus random_corpus(std::size_t n, std::size_t dim, std::uint64_t seed) {
    return {dim, eval::random_unit_vectors(n, dim, seed)};
}

StoreSegment fill(const Corpus& c, IndexKind kind = IndexKind::hnsw, const std::string& name = "seg",
                  std::size_t offset = 0) {
    StoreSegment s(name, "ultrasound", spec_of(static_cast<std::uint32_t>(c.dim)), kind);
    for (std::size_t i = 0; i < c.n(); ++i) s.insert(id_of(i + offset), c.row(i), "p" + std::to_string(i));
    return s;
}

// O(nD) scan with its own scalar loop, ordered by score then id.
std::vector<SearchHit> oracle(const std::vector<std::pair<std::string, std::span<const float>>>& rows,
                              std::span<const float> q, std::size_t k, const std::string& seg) {
    std::vector<SearchHit> all;
    for (const auto& [id, v] : rows) {
        double s = 0;
        for (std::size_t d = 0; d < v.size(); ++d) s += static_cast<double>(v[d]) * q[d];
        all.push_back({id, s, seg});
    }
    std::sort(all.begin(), all.end(), [](const SearchHit& a, const SearchHit& b) {
        return a.score != b.score ? a.score > b.score : a.chunk_id < b.chunk_id;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

std::vector<std::pair<std::string, std::span<const float>>> rows_of(const Corpus& c, std::size_t offset = 0) {
    std::vector<std::pair<std::string, std::span<const float>>> out;
    for (std::size_t i = 0; i < c.n(); ++i) out.emplace_back(id_of(i + offset), c.row(i));
    return out;
}

void check_equal(const std::vector<SearchHit>& got, const std::vector<SearchHit>& want) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].chunk_id == want[i].chunk_id);
        CHECK(std::abs(got[i].score - want[i].score) < 1e-9);
    }
}

}  // namespace

TEST_CASE("self retrieval with score 1") {
    auto c = random_corpus(50, 32, 1);
    auto s = fill(c);
    auto hits = s.search_flat(c.row(17), 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].chunk_id == id_of(17));
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.search_hnsw(c.row(17), 1)[0].chunk_id == id_of(17));
}

TEST_CASE("duplicate id and dimension mismatch") {
    auto c = random_corpus(3, 16, 2);
    auto s = fill(c);
    CHECK_THROWS_WITH_AS(s.insert(id_of(1), c.row(0), ""), doctest::Contains("DuplicateId"), Error);
    std::vector<float> wrong(8, 0.1f);
    CHECK_THROWS_WITH_AS(s.insert("x", wrong, ""), doctest::Contains("DimensionMismatch"), Error);
    CHECK_THROWS_WITH_AS(s.search_flat(wrong, 1), doctest::Contains("DimensionMismatch"), Error);
    CHECK(s.size() == 3);
}

TEST_CASE("1000 inserts give 1000 entries and nodes") {
    auto c = random_corpus(1000, 32, 3);
    auto s = fill(c);
    CHECK(s.size() == 1000);
    CHECK(s.node_count() == 1000);
}

TEST_CASE("empty segment search") {
    StoreSegment s("seg", "x", spec_of(16));
    std::vector<float> q(16, 0.25f);
    CHECK_THROWS_WITH_AS(s.search(q, 3), doctest::Contains("EmptySegment"), Error);
}

TEST_CASE("k beyond size returns everything sorted") {
    auto c = random_corpus(7, 16, 4);
    auto s = fill(c);
    auto hits = s.search_flat(c.row(0), 50);
    CHECK(hits.size() == 7);
    check_equal(hits, oracle(rows_of(c), c.row(0), 50, "seg"));
    CHECK(s.search_hnsw(c.row(0), 50).size() == 7);
}

TEST_CASE("flat search equals the brute-force oracle on random instances") {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        auto c = random_corpus(1000, 48, seed);
        auto s = fill(c, IndexKind::flat);
        auto qs = random_corpus(20, 48, seed + 100);
        for (std::size_t q = 0; q < qs.n(); ++q) check_equal(s.search_flat(qs.row(q), 10), oracle(rows_of(c), qs.row(q), 10, "seg"));
    }
}

TEST_CASE("equal scores come back in id order") {
    StoreSegment s("seg", "x", spec_of(16));
    std::vector<float> v(16, 0.0f);
    v[0] = 1.0f;
    for (const char* id : {"d", "b", "c", "a"}) s.insert(id, v, "");
    auto hits = s.search_flat(v, 4);
    REQUIRE(hits.size() == 4);
    CHECK(hits[0].chunk_id == "a");
    CHECK(hits[3].chunk_id == "d");
    auto h2 = s.search_hnsw(v, 4);
    CHECK(h2[0].chunk_id == "a");
}

TEST_CASE("hits are non-increasing in score") {
    auto c = random_corpus(500, 32, 20);
    auto s = fill(c);
    auto qs = random_corpus(10, 32, 21);
    for (std::size_t q = 0; q < qs.n(); ++q) {
        auto hits = s.search(qs.row(q), 20);
        for (std::size_t i = 1; i < hits.size(); ++i) {
            CHECK(hits[i - 1].score >= hits[i].score);
            if (hits[i - 1].score == hits[i].score) CHECK(hits[i - 1].chunk_id < hits[i].chunk_id);
        }
    }
}

TEST_CASE("search_multi equals a scan over the union") {
    auto a = random_corpus(200, 32, 30), b = random_corpus(300, 32, 31), d = random_corpus(100, 32, 32);
    auto sa = fill(a, IndexKind::flat, "a", 0), sb = fill(b, IndexKind::flat, "b", 1000),
         sd = fill(d, IndexKind::flat, "d", 5000);
    StoreSegment empty("e", "ultrasound", spec_of(32), IndexKind::flat);
    std::vector<const StoreSegment*> segs{&sa, &empty, &sb, &sd};
    auto qs = random_corpus(10, 32, 33);
    for (std::size_t q = 0; q < qs.n(); ++q) {
        std::vector<SearchHit> want;
        for (auto [c, off, name] : {std::tuple{&a, 0, "a"}, std::tuple{&b, 1000, "b"}, std::tuple{&d, 5000, "d"}}) {
            auto part = oracle(rows_of(*c, off), qs.row(q), 1000, name);
            want.insert(want.end(), part.begin(), part.end());
        }
        std::sort(want.begin(), want.end(), hit_before);
        auto k10 = want;
        k10.resize(10);
        auto got = search_multi(segs, qs.row(q), 10);
        check_equal(got, k10);
        auto top1 = search_multi(segs, qs.row(q), 1);
        REQUIRE(top1.size() == 1);
        CHECK(top1[0].chunk_id == want[0].chunk_id);
        CHECK(top1[0].segment_name == want[0].segment_name);
    }
    std::vector<const StoreSegment*> only_empty{&empty, &sa};
    for (const auto& h : search_multi(only_empty, qs.row(0), 5)) CHECK(h.segment_name == "a");

    StoreSegment other("o", "ultrasound", [] { auto s = spec_of(32); s.seed = 99; return s; }());
    other.insert("z", a.row(0), "");
    std::vector<const StoreSegment*> mixed{&sa, &other};
    CHECK_THROWS_WITH_AS(search_multi(mixed, qs.row(0), 3), doctest::Contains("MixedEmbedderSpec"), Error);
}

TEST_CASE("persist round trip keeps results") {
    testing::TempDir dir;
    auto c = random_corpus(800, 32, 40);
    auto s = fill(c);
    s.remove(id_of(5));
    s.persist(dir / "s.seg");
    auto back = StoreSegment::load(dir / "s.seg", spec_of(32));
    CHECK(back.size() == s.size());
    CHECK_FALSE(back.contains(id_of(5)));
    CHECK(back.payload_ref(id_of(6)) == "p6");
    auto qs = random_corpus(100, 32, 41);
    for (std::size_t q = 0; q < qs.n(); ++q) {
        CHECK(back.search(qs.row(q), 10) == s.search(qs.row(q), 10));
        CHECK(back.search_flat(qs.row(q), 10) == s.search_flat(qs.row(q), 10));
    }
    CHECK(back.serialize() == s.serialize());
}

TEST_CASE("damaged files are rejected") {
    testing::TempDir dir;
    auto c = random_corpus(100, 16, 42);
    auto s = fill(c);
    auto bytes = s.serialize();
    write_file_atomic(dir / "t.seg", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_WITH_AS(StoreSegment::load(dir / "t.seg"), doctest::Contains("CorruptFile"), Error);
    auto flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x40;
    write_file_atomic(dir / "f.seg", flipped);
    CHECK_THROWS_WITH_AS(StoreSegment::load(dir / "f.seg"), doctest::Contains("CorruptFile"), Error);
    write_file_atomic(dir / "ok.seg", bytes);
    auto other = spec_of(16);
    other.seed = 1;
    CHECK_THROWS_WITH_AS(StoreSegment::load(dir / "ok.seg", other), doctest::Contains("EmbedderSpecMismatch"), Error);
}

TEST_CASE("same seed and insertion order give the same graph") {
    auto c = random_corpus(600, 32, 50);
    auto a = fill(c), b = fill(c);
    CHECK(a.serialize() == b.serialize());
}

TEST_CASE("tombstones and rebuild") {
    auto c = random_corpus(100, 16, 60);
    auto s = fill(c);
    CHECK(s.remove(id_of(0)));
    CHECK_FALSE(s.remove(id_of(0)));
    auto hits = s.search(c.row(0), 100);
    for (const auto& h : hits) CHECK(h.chunk_id != id_of(0));
    CHECK(s.node_count() == 100);
    s.rebuild();
    CHECK(s.node_count() == 99);
    CHECK(s.size() == 99);
    CHECK(s.search(c.row(1), 1)[0].chunk_id == id_of(1));
}

TEST_CASE("parallel scoring equals the serial kernel") {
    auto c = random_corpus(3000, 64, 70);
    auto q = random_corpus(1, 64, 71);
    std::vector<double> a(c.n()), b(c.n());
    score_rows(c.data, 64, q.row(0), a);
    score_rows_serial(c.data, 64, q.row(0), b);
    CHECK(a == b);
}

TEST_CASE("exhaustive beam gives exact results") {
    auto c = random_corpus(1000, 32, 80);
    auto s = fill(c);
    auto qs = random_corpus(20, 32, 81);
    for (std::size_t q = 0; q < qs.n(); ++q) check_equal(s.search_hnsw(qs.row(q), 10, 1000), s.search_flat(qs.row(q), 10));
}

TEST_CASE("hnsw params validation") {
    HnswParams p;
    p.M = 1;
    CHECK_THROWS_AS(p.validate(), Error);
    CHECK(parse_index_kind("flat") == IndexKind::flat);
    CHECK_FALSE(parse_index_kind("ivf"));
}

TEST_CASE("kernel scores agree with a plain double loop") {
    auto c = random_corpus(500, 37, 72);
    auto q = random_corpus(1, 37, 73);
    std::vector<double> a(c.n());
    score_rows(c.data, 37, q.row(0), a);
    for (std::size_t r = 0; r < c.n(); ++r) {
        double s = 0;
        for (std::size_t d = 0; d < 37; ++d) s += static_cast<double>(c.row(r)[d]) * q.row(0)[d];
        CHECK(std::abs(a[r] - s) < 1e-12);
    }
}
