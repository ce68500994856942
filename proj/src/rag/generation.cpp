#include "bmet/rag/generation.hpp"

#include <httplib.h>

#include <algorithm>
#include <json.hpp>
#include <set>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/common/url.hpp"

namespace bmet::rag {

bool RetrievedContext::contains(std::string_view chunk_id) const {
    return std::any_of(hits.begin(), hits.end(), [&](const auto& h) { return h.hit.chunk_id == chunk_id; });
}

std::vector<std::string> RetrievedContext::ids() const {
    std::vector<std::string> out;
    for (const auto& h : hits) out.push_back(h.hit.chunk_id);
    return out;
}

std::string chunk_label(const ChunkRecord& chunk) {
    std::string out = chunk.doc_title;
    for (const auto& h : chunk.heading_path) {
        out += " > ";
        out += h;
    }
    return out;
}

RetrievedContext make_context(std::vector<RetrievedChunk> hits) {
    RetrievedContext ctx;
    std::set<std::string> seen;
    for (auto& h : hits) {
        if (!seen.insert(h.hit.chunk_id).second) continue;
        if (!ctx.assembled_context.empty()) ctx.assembled_context += "\n---\n";
        ctx.assembled_context += "[" + h.hit.chunk_id + "] " + chunk_label(h.chunk) + "\n" + h.chunk.text;
        ctx.hits.push_back(std::move(h));
    }
    return ctx;
}

std::string_view generation_kind_name(GenerationKind k) noexcept {
    return k == GenerationKind::remote_llm ? "remote_llm" : "extractive_local";
}

std::optional<GenerationKind> parse_generation_kind(std::string_view s) noexcept {
    if (s == "extractive_local") return GenerationKind::extractive_local;
    if (s == "remote_llm") return GenerationKind::remote_llm;
    return std::nullopt;
}

GenerationResult ExtractiveGenerator::generate(const RetrievedContext& context, std::string_view,
                                               std::string_view) const {
    if (context.hits.empty()) throw Error(Errc::InvalidArgument, "empty context");
    constexpr std::size_t min_excerpt = 160;
    constexpr std::string_view ellipsis = "...";

    std::vector<std::string> heads;
    std::size_t reserved = 0;
    for (std::size_t i = 0; i < context.hits.size(); ++i) {
        const auto& h = context.hits[i];
        heads.push_back((i ? "\n\n[" : "[") + h.hit.chunk_id + "] " + chunk_label(h.chunk) + "\n");
        reserved += heads.back().size();
    }

    // Every hit gets a labeled excerpt. The lead hit keeps as much text as the
    // budget allows after the others are guaranteed min_excerpt bytes each.
    GenerationResult r;
    std::size_t remaining = budget_ > reserved ? budget_ - reserved : 0;
    for (std::size_t i = 0; i < context.hits.size(); ++i) {
        const auto& h = context.hits[i];
        std::string_view body = trim(h.chunk.text);
        const std::size_t later = context.hits.size() - i - 1;
        std::size_t allowance = i == 0 ? (remaining > later * min_excerpt ? remaining - later * min_excerpt : 0)
                                       : remaining / (later + 1);
        std::string excerpt;
        if (body.size() <= allowance) {
            excerpt = std::string(body);
        } else if (allowance > ellipsis.size()) {
            excerpt = std::string(body.substr(0, utf8_floor(body, allowance - ellipsis.size()))) + std::string(ellipsis);
        }
        remaining -= std::min(remaining, excerpt.size());
        r.text += heads[i] + excerpt;
        r.citations.push_back(h.hit.chunk_id);
    }
    return r;
}

std::string PromptTemplate::render(std::string_view query, std::string_view context, std::string_view language) const {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            auto close = text.find('}', i);
            if (close != std::string::npos) {
                auto name = std::string_view(text).substr(i + 1, close - i - 1);
                if (name == "query" || name == "context" || name == "language") {
                    out += name == "query" ? query : name == "context" ? context : language;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += text[i++];
    }
    return out;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    return {path.stem().string(), read_file(path)};
}

RemoteLlmGenerator::RemoteLlmGenerator(RemoteLlmConfig config, PromptTemplate prompt)
    : config_(std::move(config)), prompt_(std::move(prompt)) {}

GenerationResult RemoteLlmGenerator::generate(const RetrievedContext& context, std::string_view query,
                                              std::string_view language) const {
    auto url = split_url(config_.endpoint);
    if (!url) throw Error(Errc::ProviderUnavailable, "no generation endpoint configured");
    httplib::Client client(url->origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!config_.credential.empty()) headers.emplace("Authorization", "Bearer " + config_.credential);

    nlohmann::json body{{"prompt", prompt_.render(query, context.assembled_context, language)},
                        {"context_ids", context.ids()}};
    auto res = client.Post(url->path, headers, body.dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write)
            throw Error(Errc::ProviderTimeout, httplib::to_string(res.error()));
        throw Error(Errc::ProviderUnavailable, httplib::to_string(res.error()));
    }
    if (res->status != 200) throw Error(Errc::ProviderUnavailable, "HTTP " + std::to_string(res->status));
    GenerationResult r;
    try {
        auto payload = nlohmann::json::parse(res->body);
        r.text = payload.at("text").get<std::string>();
        r.citations = payload.value("citations", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ProviderUnavailable, std::string("bad generation payload: ") + e.what());
    }
    return r;
}

GenerationResult generate_answer(const GenerationProvider& provider, const RetrievedContext& context,
                                 std::string_view query, std::string_view language,
                                 const ExtractiveGenerator& fallback) {
    if (context.hits.empty()) throw Error(Errc::InvalidArgument, "empty context");
    GenerationResult r;
    try {
        r = provider.generate(context, query, language);
    } catch (const Error& e) {
        if (e.code() != Errc::ProviderTimeout && e.code() != Errc::ProviderUnavailable) throw;
        r = fallback.generate(context, query, language);
        r.degraded = true;
    }
    std::vector<std::string> kept;
    std::set<std::string> seen;
    for (auto& c : r.citations) {
        if (!context.contains(c)) {
            r.citations_stripped = true;
            continue;
        }
        if (seen.insert(c).second) kept.push_back(std::move(c));
    }
    r.citations = std::move(kept);
    return r;
}

}  // namespace bmet::rag
