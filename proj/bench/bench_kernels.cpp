// Parallel kernels against their serial references, plus flat vs HNSW search.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "bmet/common/text.hpp"
#include "bmet/embedding/embedder.hpp"
#include "bmet/vecstore/kernels.hpp"
#include "bmet/vecstore/segment.hpp"

namespace {

constexpr std::size_t kDim = 256;

std::vector<float> unit_rows(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g;
    std::vector<float> out(n * kDim);
    for (std::size_t r = 0; r < n; ++r) {
        double norm = 0;
        for (std::size_t d = 0; d < kDim; ++d) {
            out[r * kDim + d] = g(rng);
            norm += out[r * kDim + d] * out[r * kDim + d];
        }
        for (std::size_t d = 0; d < kDim; ++d) out[r * kDim + d] /= static_cast<float>(std::sqrt(norm));
    }
    return out;
}

// Paragraphs of the desk manuals, repeated to the requested count.
std::vector<std::string> desk_paragraphs(std::size_t n) {
    std::vector<std::string> paras;
    for (const auto& e : std::filesystem::directory_iterator(std::filesystem::path(BMET_DATA_DIR) / "desk" / "docs")) {
        auto text = bmet::read_file(e.path());
        std::size_t pos = 0;
        while (pos < text.size()) {
            auto end = text.find("\n\n", pos);
            if (end == std::string::npos) end = text.size();
            if (end - pos > 40) paras.push_back(text.substr(pos, end - pos));
            pos = end + 2;
        }
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(paras[i % paras.size()]);
    return out;
}

void BM_score_rows(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    auto m = unit_rows(rows, 1);
    auto q = unit_rows(1, 2);
    std::vector<double> out(rows);
    for (auto _ : state) {
        bmet::vecstore::score_rows(m, kDim, q, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows));
}

void BM_score_rows_serial(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    auto m = unit_rows(rows, 1);
    auto q = unit_rows(1, 2);
    std::vector<double> out(rows);
    for (auto _ : state) {
        bmet::vecstore::score_rows_serial(m, kDim, q, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows));
}

void BM_embed_batch(benchmark::State& state) {
    auto texts = desk_paragraphs(static_cast<std::size_t>(state.range(0)));
    auto e = bmet::embedding::make_embedder({});
    for (auto _ : state) benchmark::DoNotOptimize(e->embed_batch(texts));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * texts.size()));
}

void BM_embed_batch_serial(benchmark::State& state) {
    auto texts = desk_paragraphs(static_cast<std::size_t>(state.range(0)));
    auto e = bmet::embedding::make_embedder({});
    for (auto _ : state) benchmark::DoNotOptimize(e->embed_batch_serial(texts));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * texts.size()));
}

const bmet::vecstore::StoreSegment& search_segment() {
    static const auto seg = [] {
        bmet::embedding::EmbedderSpec spec;
        auto s = std::make_unique<bmet::vecstore::StoreSegment>("bench", "x", spec);
        auto rows = unit_rows(10000, 3);
        for (std::size_t i = 0; i < 10000; ++i)
            s->insert("v" + std::to_string(i), std::span<const float>(rows.data() + i * kDim, kDim), "");
        return s;
    }();
    return *seg;
}

void BM_search_flat(benchmark::State& state) {
    const auto& seg = search_segment();
    auto q = unit_rows(1, 4);
    for (auto _ : state) benchmark::DoNotOptimize(seg.search_flat(q, 10));
}

void BM_search_hnsw(benchmark::State& state) {
    const auto& seg = search_segment();
    auto q = unit_rows(1, 4);
    const auto ef = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(seg.search_hnsw(q, 10, ef));
}

}  // namespace

BENCHMARK(BM_score_rows)->Arg(10000)->Arg(100000);
BENCHMARK(BM_score_rows_serial)->Arg(10000)->Arg(100000);
BENCHMARK(BM_embed_batch)->Arg(256);
BENCHMARK(BM_embed_batch_serial)->Arg(256);
BENCHMARK(BM_search_flat);
BENCHMARK(BM_search_hnsw)->Arg(64)->Arg(512);

BENCHMARK_MAIN();
