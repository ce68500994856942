#include "bmet/server/desk.hpp"

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/corpus/manifest.hpp"
#include "bmet/rag/json_codec.hpp"

namespace bmet::server {

rag::IngestReport ingest_corpus(const std::filesystem::path& manifest, const ServerConfig& config) {
    auto records = corpus::read_manifest(manifest);
    auto embedder = embedding::make_embedder(config.embedder, config.remote_embedder);
    rag::IngestReport report;
    auto kb = rag::build_knowledge_base(records, *embedder, rag::IngestOptions{config.chunking, config.index}, report);
    ensure_writable_dir(config.data_dir);
    kb->persist(config.data_dir);
    return report;
}

Desk::Desk(ServerConfig config, Clock clock)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      tokens_(config_.token_ttl, clock_),
      sessions_(config_.session_idle, clock_) {
    config_.validate();
    if (config_.exemplars.empty()) throw Error(Errc::InvalidConfig, "exemplars is required");
    ensure_writable_dir(config_.data_dir);
    tokens_.set_admin_token(config_.admin_token);

    embedder_ = embedding::make_embedder(config_.embedder, config_.remote_embedder);

    selftest_lib_ = std::make_shared<tools::SelfTestLibrary>();
    if (!config_.selftest_dir.empty()) selftest_lib_->load_dir(config_.selftest_dir);
    selftests_ = std::make_unique<tools::SelfTestManager>(selftest_lib_);
    maintenance_ = std::make_shared<tools::MaintenanceLibrary>();
    if (!config_.maintenance_dir.empty()) maintenance_->load_dir(config_.maintenance_dir);

    try {
        kb_ = rag::KnowledgeBase::load(config_.data_dir, config_.embedder);
    } catch (const Error& e) {
        if (e.code() != Errc::MissingStores) throw;
        degraded_reason_ = e.what();
    }

    if (kb_) {
        rag::EngineParts parts;
        parts.kb = kb_;
        parts.embedder = embedder_;
        parts.router = build_router();
        if (config_.generation == rag::GenerationKind::remote_llm) {
            auto prompt = config_.prompt_template.empty() ? rag::PromptTemplate{"default", "{context}\n\n{query}"}
                                                          : rag::PromptTemplate::load(config_.prompt_template);
            parts.generator = std::make_shared<rag::RemoteLlmGenerator>(config_.llm, std::move(prompt));
        } else {
            parts.generator = std::make_shared<rag::ExtractiveGenerator>(config_.answer_budget);
        }
        parts.translator = std::make_shared<rag::IdentityTranslator>();
        parts.tools = rag::ToolSuite{selftest_lib_, maintenance_};
        parts.detector = rag::LanguageDetector(config_.default_language);
        if (!config_.language_profiles.empty()) parts.detector.load_dir(config_.language_profiles);
        if (!config_.refusal_templates.empty()) parts.refusals.load(config_.refusal_templates);
        parts.config = rag::RagConfig{config_.k_default, config_.tau_ground, config_.answer_budget,
                                      config_.maintenance_horizon_days, config_.default_language};
        parts.clock = clock_;
        engine_ = std::make_unique<rag::RagEngine>(std::move(parts));
    }

    forum_ = std::make_unique<forum::Forum>(clock_);
    forum_->attach_log(config_.data_dir / "forum.jsonl");
    answers_ = std::make_unique<AnswerLog>(config_.data_dir / "answers.log");
    feedback_ = std::make_unique<forum::FeedbackStore>(
        [this](std::string_view target) {
            return answers_->contains(target) || forum_->reply(target).has_value() || forum_->post(target).has_value();
        },
        clock_);
    feedback_->attach_log(config_.data_dir / "feedback.jsonl");
    interactions_ = std::make_unique<InteractionLog>(config_.data_dir / "interactions.jsonl");
}

std::shared_ptr<router::IntentRouter> Desk::build_router() const {
    router::RouterConfig rc;
    rc.tau_intent = config_.tau_intent;
    rc.code_pattern = config_.code_pattern;
    auto r = std::make_shared<router::IntentRouter>(embedder_, rc);
    r->load_exemplar_file(config_.exemplars);
    return r;
}

rag::RagEngine& Desk::engine() {
    if (!engine_) throw Error(Errc::StoreUnavailable, "no knowledge base loaded; tools only");
    return *engine_;
}

std::string Desk::actor_id(const std::string& technician_id) const {
    return config_.anonymized_logging ? forum::hash_identity(config_.log_salt, technician_id) : technician_id;
}

QueryOutcome Desk::query(rag::QueryRequest request, const std::optional<Identity>& who) {
    QueryOutcome out;
    if (request.session_id) {
        auto s = sessions_.touch(*request.session_id, request.device_model);
        if (!request.device_model) request.device_model = s.device_model;
        out.session_id = s.session_id;
    }
    out.answer = engine().answer_query(request);
    answers_->add(out.answer.answer_id);

    InteractionRecord r;
    r.at = clock_();
    r.actor = who ? actor_id(who->technician_id) : "anonymous";
    r.session = out.session_id ? forum::hash_identity(config_.log_salt, *out.session_id) : "";
    r.query = request.text;
    r.answer_id = out.answer.answer_id;
    r.kind = rag::answer_kind_name(out.answer.kind);
    r.intent = router::intent_name(out.answer.intent);
    r.grounded = out.answer.grounded;
    r.citations = out.answer.citations;
    r.latency_ms = out.answer.latency_ms;
    interactions_->append(r);
    return out;
}

std::optional<forum::PromotionResult> Desk::maybe_promote(const std::string& reply_id) {
    if (!kb_) return std::nullopt;
    try {
        return forum::promote_to_knowledge(*forum_, reply_id, config_.promotion, *kb_, *embedder_, config_.chunking,
                                           config_.data_dir);
    } catch (const Error& e) {
        if (e.code() == Errc::RuleNotMet || e.code() == Errc::AlreadyPromoted) return std::nullopt;
        throw;
    }
}

void Desk::reload_exemplars() { engine().set_router(build_router()); }

nlohmann::json Desk::health() const {
    nlohmann::json segments = nlohmann::json::array();
    // The three manual-derived stores; community fills later through promotion.
    nlohmann::json core = nlohmann::json::array();
    std::size_t chunks = 0;
    nlohmann::json catalogs = nlohmann::json::object();
    if (kb_) {
        for (const auto& s : kb_->status()) {
            nlohmann::json e{{"device_class", s.device_class}, {"segment", s.name}, {"size", s.size}};
            if (s.name != corpus::doc_class_name(corpus::DocClass::community)) core.push_back(e);
            segments.push_back(std::move(e));
        }
        chunks = kb_->chunk_count();
        for (const auto& m : kb_->device_models()) {
            auto c = kb_->catalog(m);
            catalogs[m] = c ? c->entries().size() : 0;
        }
    }
    nlohmann::json j{{"status", kb_ ? "ok" : "degraded"},
                     {"embedder", rag::to_json(config_.embedder)},
                     {"embedder_fingerprint", config_.embedder.fingerprint()},
                     {"index_kind", vecstore::index_kind_name(config_.index.kind)},
                     {"generation", rag::generation_kind_name(config_.generation)},
                     {"core_segments", core},
                     {"segments", segments},
                     {"chunks", chunks},
                     {"catalogs", catalogs},
                     {"selftest_models", selftest_lib_->models()},
                     {"kiosk_mode", config_.kiosk_mode}};
    if (!kb_) j["reason"] = degraded_reason_;
    return j;
}

}  // namespace bmet::server
