#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "bmet/embedding/embedder.hpp"
#include "bmet/forum/forum.hpp"
#include "bmet/forum/promotion.hpp"
#include "bmet/rag/engine.hpp"
#include "bmet/rag/ingest.hpp"
#include "bmet/server/config.hpp"
#include "bmet/server/state.hpp"
#include "bmet/tools/self_test.hpp"

namespace bmet::server {

// Reads the manifest, builds every segment and persists the knowledge base to
// the configured data directory.
rag::IngestReport ingest_corpus(const std::filesystem::path& manifest, const ServerConfig& config);

struct QueryOutcome {
    rag::RagAnswer answer;
    std::optional<std::string> session_id;
};

// Everything a running help desk holds: stores, engine, tools, forum, feedback,
// sessions and logs. Without a knowledge base on disk the desk runs degraded,
// serving the standalone tools only.
class Desk {
public:
    explicit Desk(ServerConfig config, Clock clock = system_clock());

    const ServerConfig& config() const noexcept { return config_; }
    bool degraded() const noexcept { return !engine_; }
    const std::string& degraded_reason() const noexcept { return degraded_reason_; }

    // Throws Error(StoreUnavailable) when degraded.
    rag::RagEngine& engine();
    rag::KnowledgeBase* knowledge_base() noexcept { return kb_.get(); }
    const embedding::Embedder& embedder() const noexcept { return *embedder_; }
    tools::SelfTestManager& selftests() noexcept { return *selftests_; }
    const tools::MaintenanceLibrary& maintenance() const noexcept { return *maintenance_; }
    forum::Forum& forum() noexcept { return *forum_; }
    forum::FeedbackStore& feedback() noexcept { return *feedback_; }
    TokenStore& tokens() noexcept { return tokens_; }
    SessionStore& sessions() noexcept { return sessions_; }
    InteractionLog& interactions() noexcept { return *interactions_; }
    const AnswerLog& answers() const noexcept { return *answers_; }
    Clock clock() const { return clock_; }

    // Technician id as stored in forum, feedback and logs.
    std::string actor_id(const std::string& technician_id) const;

    // Resolves the session (creating none), answers, and logs the interaction.
    QueryOutcome query(rag::QueryRequest request, const std::optional<Identity>& who = std::nullopt);

    // Promotes the reply when the rule holds and it has not been promoted yet.
    std::optional<forum::PromotionResult> maybe_promote(const std::string& reply_id);

    // Rebuilds the router from the exemplar file and swaps it in.
    void reload_exemplars();

    nlohmann::json health() const;

private:
    std::shared_ptr<router::IntentRouter> build_router() const;

    ServerConfig config_;
    Clock clock_;
    std::shared_ptr<const embedding::Embedder> embedder_;
    std::shared_ptr<rag::KnowledgeBase> kb_;
    std::string degraded_reason_;
    std::unique_ptr<rag::RagEngine> engine_;
    std::shared_ptr<tools::SelfTestLibrary> selftest_lib_;
    std::unique_ptr<tools::SelfTestManager> selftests_;
    std::shared_ptr<tools::MaintenanceLibrary> maintenance_;
    std::unique_ptr<forum::Forum> forum_;
    std::unique_ptr<AnswerLog> answers_;
    std::unique_ptr<forum::FeedbackStore> feedback_;
    std::unique_ptr<InteractionLog> interactions_;
    TokenStore tokens_;
    SessionStore sessions_;
};

}  // namespace bmet::server
