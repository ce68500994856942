#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bmet/common/time.hpp"
#include "bmet/embedding/embedder.hpp"
#include "bmet/rag/generation.hpp"
#include "bmet/rag/knowledge_base.hpp"
#include "bmet/rag/language.hpp"
#include "bmet/router/router.hpp"
#include "bmet/tools/maintenance.hpp"
#include "bmet/tools/self_test.hpp"

namespace bmet::rag {

struct RagConfig {
    std::size_t k_default = 5;
    double tau_ground = 0.18;
    std::size_t answer_budget = 4000;
    int maintenance_horizon_days = 365;
    std::string corpus_language = "en";
};

struct QueryRequest {
    std::string text;
    std::optional<std::string> language;
    std::optional<std::string> device_model;
    std::optional<std::string> session_id;
    std::optional<std::size_t> k;
    // Doc-class names; replaces the intent's segment mapping.
    std::optional<std::vector<std::string>> requested_segments;
};

enum class AnswerKind { rag, tool, refusal };
std::string_view answer_kind_name(AnswerKind k) noexcept;

struct RagAnswer {
    std::string answer_id;
    AnswerKind kind = AnswerKind::refusal;
    std::string text;
    std::vector<std::string> citations;
    bool grounded = false;
    double confidence = 0.0;  // top retrieval score
    double latency_ms = 0.0;
    std::string language;
    std::string request_language;
    router::Intent intent = router::Intent::unknown;
    double intent_confidence = 0.0;
    std::optional<std::string> device_model;
    std::vector<vecstore::SearchHit> retrieved;
    std::vector<std::string> segments_queried;
    std::string tool;  // empty unless kind == tool
    nlohmann::json tool_payload;
    bool low_confidence = false;  // unknown intent answered on the instructional path
    bool degraded = false;
    bool citations_stripped = false;
    bool untranslated = false;
};

// Per-language refusal wording; `lang | text` records, "en" is the fallback.
class RefusalTemplates {
public:
    RefusalTemplates();
    void set(std::string language, std::string text);
    void load(const std::filesystem::path& path);
    const std::string& get(std::string_view language) const;
    bool is_refusal(std::string_view text) const;

private:
    std::map<std::string, std::string, std::less<>> by_lang_;
};

struct ToolSuite {
    std::shared_ptr<const tools::SelfTestLibrary> selftest;
    std::shared_ptr<const tools::MaintenanceLibrary> maintenance;
};

struct EngineParts {
    std::shared_ptr<KnowledgeBase> kb;
    std::shared_ptr<const embedding::Embedder> embedder;
    std::shared_ptr<const router::IntentRouter> router;
    std::shared_ptr<const GenerationProvider> generator;
    std::shared_ptr<const TranslationProvider> translator;
    ToolSuite tools;
    LanguageDetector detector;
    RefusalTemplates refusals;
    RagConfig config;
    Clock clock = system_clock();
};

// Default segment mapping per intent.
std::vector<corpus::DocClass> segments_for_intent(router::Intent intent);

// Stable id of an answer: digest of the request fields that determine it.
std::string make_answer_id(const QueryRequest& request);

class RagEngine {
public:
    explicit RagEngine(EngineParts parts);

    const RagConfig& config() const noexcept { return parts_.config; }
    const KnowledgeBase& knowledge_base() const noexcept { return *parts_.kb; }
    const embedding::Embedder& embedder() const noexcept { return *parts_.embedder; }
    std::shared_ptr<const router::IntentRouter> router() const;
    // Swaps the router in place; queries already running keep the old one.
    void set_router(std::shared_ptr<const router::IntentRouter> router);
    const RefusalTemplates& refusals() const noexcept { return parts_.refusals; }
    const LanguageDetector& detector() const noexcept { return parts_.detector; }

    // Throws Error(EmptyQuery), Error(InvalidArgument) for k = 0 or an unknown
    // segment name, and Error(StoreUnavailable) when nothing is ingested.
    RagAnswer answer_query(const QueryRequest& request) const;

    // Global top-k over the given doc-class segments of the listed device classes.
    RetrievedContext retrieve(const embedding::EmbeddingVector& query, std::span<const std::string> device_classes,
                              std::span<const corpus::DocClass> classes, std::size_t k,
                              std::vector<std::string>* segments_queried = nullptr) const;

private:
    struct Scope {
        std::vector<std::string> models;
        std::vector<std::string> classes;
    };
    Scope scope_for(const QueryRequest& request) const;
    void refuse(RagAnswer& a) const;
    void answer_rag(RagAnswer& a, const QueryRequest& req, const Scope& scope,
                    std::span<const corpus::DocClass> classes) const;
    void answer_error_code(RagAnswer& a, const std::string& code, const Scope& scope) const;
    void answer_log_analysis(RagAnswer& a) const;
    void answer_self_test(RagAnswer& a, const Scope& scope) const;
    void answer_maintenance(RagAnswer& a, const Scope& scope) const;
    void finish_language(RagAnswer& a) const;

    EngineParts parts_;
    mutable std::mutex router_mu_;
};

}  // namespace bmet::rag
