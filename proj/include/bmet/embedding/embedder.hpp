#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bmet::embedding {

enum class Provider { local_hashed_ngram, remote };

std::string_view provider_name(Provider p) noexcept;
std::optional<Provider> parse_provider(std::string_view s) noexcept;

struct EmbedderSpec {
    Provider provider = Provider::local_hashed_ngram;
    std::uint32_t dimension = 256;
    std::uint32_t ngram_min = 3;
    std::uint32_t ngram_max = 5;
    std::uint64_t seed = 0x5eed;

    void validate() const;
    bool operator==(const EmbedderSpec&) const = default;
    // Short hex digest identifying the spec, reported by the health endpoint.
    std::string fingerprint() const;
};

struct EmbeddingVector {
    std::vector<float> values;
    // Set for the empty-text embedding, which cannot be normalized.
    bool is_zero = false;

    std::size_t dimension() const noexcept { return values.size(); }
};

// Double-accumulated dot product over float storage.
double dot(std::span<const float> a, std::span<const float> b) noexcept;
double l2_norm(std::span<const float> v) noexcept;

// Cosine of the two inputs after L2 normalization; 0 when either is zero.
// Throws Error(DimensionMismatch).
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual const EmbedderSpec& spec() const noexcept = 0;
    virtual EmbeddingVector embed(std::string_view text) const = 0;

    // Embeds independent texts in parallel; output order matches input.
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;
    // Single-threaded reference for embed_batch.
    std::vector<EmbeddingVector> embed_batch_serial(std::span<const std::string> texts) const;
};

// Character n-grams (ngram_min..ngram_max code points) over lowercased,
// punctuation-folded text. Each distinct n-gram contributes log(1 + tf) to one
// of `dimension` buckets with a hash-derived sign; the sum is L2-normalized.
class HashedNgramEmbedder final : public Embedder {
public:
    explicit HashedNgramEmbedder(EmbedderSpec spec);
    const EmbedderSpec& spec() const noexcept override { return spec_; }
    EmbeddingVector embed(std::string_view text) const override;

    // Normalized form the n-grams are drawn from (exposed for tests).
    static std::u32string prepare(std::string_view text);

private:
    EmbedderSpec spec_;
};

struct RemoteEmbedderConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8089/embed
    std::string credential;
    std::chrono::milliseconds timeout{5000};
};

// POSTs {"input": text} and expects {"embedding": [...]} of the spec's dimension.
// Any transport failure or bad payload raises Error(ProviderUnavailable).
class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(EmbedderSpec spec, RemoteEmbedderConfig config);
    const EmbedderSpec& spec() const noexcept override { return spec_; }
    EmbeddingVector embed(std::string_view text) const override;

private:
    EmbedderSpec spec_;
    RemoteEmbedderConfig config_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec, const RemoteEmbedderConfig& remote = {});

}  // namespace bmet::embedding
