#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmet/rag/knowledge_base.hpp"
#include "bmet/vecstore/segment.hpp"

namespace bmet::rag {

struct RetrievedChunk {
    vecstore::SearchHit hit;
    ChunkRecord chunk;
};

struct RetrievedContext {
    std::vector<RetrievedChunk> hits;
    // Each hit once, as "[chunk_id] title > heading path" then its text,
    // separated by "\n---\n".
    std::string assembled_context;

    bool contains(std::string_view chunk_id) const;
    std::vector<std::string> ids() const;
};

// "Title > Heading > Subheading".
std::string chunk_label(const ChunkRecord& chunk);
RetrievedContext make_context(std::vector<RetrievedChunk> hits);

enum class GenerationKind { extractive_local, remote_llm };

std::string_view generation_kind_name(GenerationKind k) noexcept;
std::optional<GenerationKind> parse_generation_kind(std::string_view s) noexcept;

struct GenerationResult {
    std::string text;
    std::vector<std::string> citations;
    bool degraded = false;            // remote provider failed, extractive fallback used
    bool citations_stripped = false;  // provider cited ids outside the context
};

class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;
    virtual GenerationKind kind() const noexcept = 0;
    // Throws Error(ProviderTimeout) or Error(ProviderUnavailable) on failure.
    virtual GenerationResult generate(const RetrievedContext& context, std::string_view query,
                                      std::string_view language) const = 0;
};

// Heading path and text of each hit in rank order, labeled with its chunk id.
// Excerpts are trimmed so the whole answer stays within `budget` bytes; the
// lead hit gets the largest share and every hit keeps its label.
class ExtractiveGenerator final : public GenerationProvider {
public:
    explicit ExtractiveGenerator(std::size_t budget = 4000) : budget_(budget) {}
    GenerationKind kind() const noexcept override { return GenerationKind::extractive_local; }
    GenerationResult generate(const RetrievedContext& context, std::string_view query,
                              std::string_view language) const override;

private:
    std::size_t budget_;
};

// Prompt text with {query}, {context} and {language} placeholders.
struct PromptTemplate {
    std::string id;
    std::string text;

    std::string render(std::string_view query, std::string_view context, std::string_view language) const;
    static PromptTemplate load(const std::filesystem::path& path);
};

struct RemoteLlmConfig {
    std::string endpoint;
    std::string credential;
    std::chrono::milliseconds timeout{8000};
};

// POSTs {"prompt", "context_ids"} and expects {"text", "citations"}.
class RemoteLlmGenerator final : public GenerationProvider {
public:
    RemoteLlmGenerator(RemoteLlmConfig config, PromptTemplate prompt);
    GenerationKind kind() const noexcept override { return GenerationKind::remote_llm; }
    GenerationResult generate(const RetrievedContext& context, std::string_view query,
                              std::string_view language) const override;

private:
    RemoteLlmConfig config_;
    PromptTemplate prompt_;
};

// Runs the provider, falls back to extractive output when it fails, and drops
// every citation that is not part of the context. Throws Error(InvalidArgument)
// on an empty context.
GenerationResult generate_answer(const GenerationProvider& provider, const RetrievedContext& context,
                                 std::string_view query, std::string_view language,
                                 const ExtractiveGenerator& fallback = ExtractiveGenerator{});

}  // namespace bmet::rag
