#include "bmet/embedding/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::embedding {

std::string_view provider_name(Provider p) noexcept {
    return p == Provider::remote ? "remote" : "local_hashed_ngram";
}

std::optional<Provider> parse_provider(std::string_view s) noexcept {
    if (s == "local_hashed_ngram") return Provider::local_hashed_ngram;
    if (s == "remote") return Provider::remote;
    return std::nullopt;
}

void EmbedderSpec::validate() const {
    if (dimension < 16) throw Error(Errc::InvalidConfig, "embedder dimension must be >= 16");
    if (ngram_min == 0 || ngram_min > ngram_max) throw Error(Errc::InvalidConfig, "bad n-gram range");
}

std::string EmbedderSpec::fingerprint() const {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s/%u/%u-%u/%llu", std::string(provider_name(provider)).c_str(), dimension,
                  ngram_min, ngram_max, static_cast<unsigned long long>(seed));
    return sha256_hex(buf).substr(0, 16);
}

double dot(std::span<const float> a, std::span<const float> b) noexcept {
    // Four fixed lanes keep the summation order platform independent while
    // letting the compiler vectorize.
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = std::min(a.size(), b.size());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (std::size_t j = 0; j < 4; ++j)
            lane[j] += static_cast<double>(a[i + j]) * static_cast<double>(b[i + j]);
    }
    for (; i < n; ++i) lane[0] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double l2_norm(std::span<const float> v) noexcept { return std::sqrt(dot(v, v)); }

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        throw Error(Errc::DimensionMismatch,
                    std::to_string(a.dimension()) + " vs " + std::to_string(b.dimension()));
    const double na = l2_norm(a.values);
    const double nb = l2_norm(b.values);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a.values, b.values) / (na * nb), -1.0, 1.0);
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out(texts.size());
    const auto n = static_cast<long>(texts.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = embed(texts[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<EmbeddingVector> Embedder::embed_batch_serial(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

HashedNgramEmbedder::HashedNgramEmbedder(EmbedderSpec spec) : spec_(spec) {
    spec_.validate();
    if (spec_.provider != Provider::local_hashed_ngram)
        throw Error(Errc::InvalidConfig, "HashedNgramEmbedder requires the local provider");
}

namespace {

bool is_word_char(char32_t c) {
    if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    return c != 0xFFFD && !(c >= 0x2000 && c <= 0x206F) && c != 0xA0 && c != 0xAB && c != 0xBB;
}

char32_t fold_case(char32_t c) {
    if (c >= 'A' && c <= 'Z') return c + 32;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    return c;
}

}  // namespace

std::u32string HashedNgramEmbedder::prepare(std::string_view text) {
    std::u32string out;
    out.push_back(U' ');
    for (char32_t c : utf8_decode(text)) {
        if (is_word_char(c)) {
            out.push_back(fold_case(c));
        } else if (out.back() != U' ') {
            out.push_back(U' ');
        }
    }
    if (out.back() != U' ') out.push_back(U' ');
    if (out.size() == 1) out.clear();
    return out;
}

EmbeddingVector HashedNgramEmbedder::embed(std::string_view text) const {
    EmbeddingVector result;
    result.values.assign(spec_.dimension, 0.0f);
    const std::u32string prepared = prepare(text);
    std::vector<std::uint64_t> grams;
    for (std::uint32_t n = spec_.ngram_min; n <= spec_.ngram_max; ++n) {
        if (prepared.size() < n) break;
        for (std::size_t i = 0; i + n <= prepared.size(); ++i) {
            std::u32string_view gram(prepared.data() + i, n);
            std::string bytes = utf8_encode(gram);
            grams.push_back(fnv1a64(bytes, spec_.seed));
        }
    }
    if (grams.empty()) {
        result.is_zero = true;
        return result;
    }
    std::sort(grams.begin(), grams.end());

    std::vector<double> acc(spec_.dimension, 0.0);
    for (std::size_t i = 0; i < grams.size();) {
        std::size_t j = i;
        while (j < grams.size() && grams[j] == grams[i]) ++j;
        const std::uint64_t h = mix64(grams[i]);
        const std::size_t bucket = static_cast<std::size_t>(h % spec_.dimension);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        acc[bucket] += sign * std::log1p(static_cast<double>(j - i));
        i = j;
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        result.is_zero = true;
        return result;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) result.values[i] = static_cast<float>(acc[i] / norm);
    return result;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec, const RemoteEmbedderConfig& remote) {
    if (spec.provider == Provider::remote) return std::make_unique<RemoteEmbedder>(spec, remote);
    return std::make_unique<HashedNgramEmbedder>(spec);
}

}  // namespace bmet::embedding
