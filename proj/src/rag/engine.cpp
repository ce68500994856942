#include "bmet/rag/engine.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/rag/json_codec.hpp"
#include "bmet/tools/log_analysis.hpp"

namespace bmet::rag {

using router::Intent;

std::string_view answer_kind_name(AnswerKind k) noexcept {
    switch (k) {
        case AnswerKind::rag: return "rag";
        case AnswerKind::tool: return "tool";
        case AnswerKind::refusal: return "refusal";
    }
    return "refusal";
}

RefusalTemplates::RefusalTemplates() {
    by_lang_["en"] =
        "I could not find this in the device documentation, so I cannot give a sourced answer. "
        "Please rephrase the question, name the device model, or ask on the technician forum.";
}

void RefusalTemplates::set(std::string language, std::string text) { by_lang_[std::move(language)] = std::move(text); }

void RefusalTemplates::load(const std::filesystem::path& path) {
    auto text = read_file(path);
    for (auto line : split_lines(text)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto bar = t.find('|');
        if (bar == std::string_view::npos) throw Error(Errc::InvalidArgument, "refusal template line without '|'");
        set(std::string(trim(t.substr(0, bar))), std::string(trim(t.substr(bar + 1))));
    }
}

const std::string& RefusalTemplates::get(std::string_view language) const {
    auto it = by_lang_.find(language);
    if (it == by_lang_.end()) it = by_lang_.find("en");
    return it->second;
}

bool RefusalTemplates::is_refusal(std::string_view text) const {
    return std::any_of(by_lang_.begin(), by_lang_.end(), [&](const auto& kv) { return kv.second == text; });
}

std::vector<corpus::DocClass> segments_for_intent(Intent intent) {
    using corpus::DocClass;
    switch (intent) {
        case Intent::error_code_lookup: return {DocClass::error_catalog};
        case Intent::forum_search: return {DocClass::community};
        default: return {DocClass::user_manual, DocClass::service_manual, DocClass::community};
    }
}

std::string make_answer_id(const QueryRequest& r) {
    std::string key = "answer/1\n";
    key += std::string(trim(r.text)) + "\n";
    key += r.language.value_or("") + "\n";
    key += r.device_model.value_or("") + "\n";
    key += r.k ? std::to_string(*r.k) : std::string();
    key += "\n";
    if (r.requested_segments) {
        for (const auto& s : *r.requested_segments) key += s + ",";
    }
    return "ans-" + sha256_hex(key).substr(0, 24);
}

std::shared_ptr<const router::IntentRouter> RagEngine::router() const {
    std::lock_guard lock(router_mu_);
    return parts_.router;
}

void RagEngine::set_router(std::shared_ptr<const router::IntentRouter> router) {
    if (!router) throw Error(Errc::InvalidArgument, "null router");
    std::lock_guard lock(router_mu_);
    parts_.router = std::move(router);
}

RagEngine::RagEngine(EngineParts parts) : parts_(std::move(parts)) {
    if (!parts_.kb || !parts_.embedder || !parts_.router)
        throw Error(Errc::InvalidArgument, "engine needs a knowledge base, an embedder and a router");
    if (!(parts_.embedder->spec() == parts_.kb->embedder_spec()))
        throw Error(Errc::EmbedderSpecMismatch, "embedder does not match the stores");
    if (!parts_.generator) parts_.generator = std::make_shared<ExtractiveGenerator>(parts_.config.answer_budget);
    if (!parts_.translator) parts_.translator = std::make_shared<IdentityTranslator>();
    if (parts_.config.tau_ground < 0.0 || parts_.config.tau_ground > 1.0)
        throw Error(Errc::InvalidConfig, "tau_ground must lie in [0, 1]");
    if (parts_.config.k_default < 1) throw Error(Errc::InvalidConfig, "k_default must be at least 1");
}

RagEngine::Scope RagEngine::scope_for(const QueryRequest& request) const {
    Scope s;
    if (request.device_model && !request.device_model->empty()) {
        auto cls = parts_.kb->device_class_of(*request.device_model);
        if (!cls) throw Error(Errc::StoreUnavailable, "no stores for device model " + *request.device_model);
        s.models.push_back(*request.device_model);
        s.classes.push_back(*cls);
        return s;
    }
    s.models = parts_.kb->device_models();
    s.classes = parts_.kb->device_classes();
    return s;
}

RetrievedContext RagEngine::retrieve(const embedding::EmbeddingVector& query,
                                     std::span<const std::string> device_classes,
                                     std::span<const corpus::DocClass> classes, std::size_t k,
                                     std::vector<std::string>* segments_queried) const {
    std::vector<const vecstore::StoreSegment*> segs;
    for (const auto& dc : device_classes) {
        for (auto cls : classes) {
            if (const auto* seg = parts_.kb->segment(dc, cls)) {
                segs.push_back(seg);
                if (segments_queried) segments_queried->push_back(dc + "/" + seg->name());
            }
        }
    }
    std::vector<RetrievedChunk> joined;
    if (!query.is_zero && !segs.empty()) {
        for (auto& hit : vecstore::search_multi(segs, query.values, k)) {
            auto rec = parts_.kb->chunk(hit.chunk_id);
            if (!rec) continue;
            joined.push_back({std::move(hit), std::move(*rec)});
        }
    }
    return make_context(std::move(joined));
}

void RagEngine::refuse(RagAnswer& a) const {
    a.kind = AnswerKind::refusal;
    a.grounded = false;
    a.citations.clear();
    a.tool.clear();
    a.tool_payload = nullptr;
    a.text = parts_.refusals.get(a.request_language);
    a.language = a.request_language;
    if (parts_.refusals.get(a.request_language) == parts_.refusals.get("en") && a.request_language != "en") {
        a.language = "en";
        a.untranslated = true;
    }
}

void RagEngine::answer_rag(RagAnswer& a, const QueryRequest& req, const Scope& scope,
                           std::span<const corpus::DocClass> classes) const {
    if (parts_.kb->chunk_count() == 0) throw Error(Errc::StoreUnavailable, "no documents have been ingested");
    const std::size_t k = req.k.value_or(parts_.config.k_default);
    auto q = parts_.embedder->embed(req.text);
    auto ctx = retrieve(q, scope.classes, classes, k, &a.segments_queried);
    for (const auto& h : ctx.hits) a.retrieved.push_back(h.hit);
    a.confidence = ctx.hits.empty() ? 0.0 : ctx.hits.front().hit.score;
    if (ctx.hits.empty() || a.confidence < parts_.config.tau_ground) {
        refuse(a);
        return;
    }
    auto gen = generate_answer(*parts_.generator, ctx, req.text, parts_.config.corpus_language,
                               ExtractiveGenerator(parts_.config.answer_budget));
    a.degraded = gen.degraded;
    a.citations_stripped = gen.citations_stripped;
    if (gen.citations.empty()) {
        refuse(a);
        return;
    }
    a.kind = AnswerKind::rag;
    a.grounded = true;
    a.text = std::move(gen.text);
    a.citations = std::move(gen.citations);
}

void RagEngine::answer_error_code(RagAnswer& a, const std::string& code, const Scope& scope) const {
    a.kind = AnswerKind::tool;
    a.tool = "error_code_lookup";
    std::vector<std::pair<std::string, std::shared_ptr<const tools::ErrorCatalog>>> catalogs;
    for (const auto& m : scope.models) {
        if (auto c = parts_.kb->catalog(m)) catalogs.emplace_back(m, std::move(c));
    }
    if (catalogs.empty()) throw Error(Errc::NoCatalogLoaded, "no error catalog loaded");

    std::set<std::string> candidates;
    for (const auto& [model, cat] : catalogs) {
        auto ans = tools::lookup_error_code(code, cat.get());
        if (ans.tier == tools::LookupTier::exact) {
            const auto& e = *ans.entry;
            a.tool_payload = to_json(ans);
            a.tool_payload["device_model"] = model;
            a.device_model = model;
            a.text = e.code + ": " + e.description;
            if (!e.causes.empty()) a.text += "\nPossible causes: " + [&] {
                std::string s;
                for (const auto& c : e.causes) s += (s.empty() ? "" : "; ") + c;
                return s;
            }();
            if (!e.corrective_actions.empty()) a.text += "\nCorrective actions: " + [&] {
                std::string s;
                for (const auto& c : e.corrective_actions) s += (s.empty() ? "" : "; ") + c;
                return s;
            }();
            a.confidence = 1.0;
            if (!e.source_chunk_id.empty()) {
                a.text += "\nSource: [" + e.source_chunk_id + "]";
                a.retrieved.push_back({e.source_chunk_id, 1.0, std::string(corpus::doc_class_name(corpus::DocClass::error_catalog))});
                a.citations.push_back(e.source_chunk_id);
                a.grounded = true;
            }
            return;
        }
        candidates.insert(ans.candidates.begin(), ans.candidates.end());
    }

    if (!candidates.empty()) {
        tools::ErrorCodeAnswer ans;
        ans.tier = tools::LookupTier::disambiguation;
        ans.query_code = code;
        ans.candidates.assign(candidates.begin(), candidates.end());
        a.tool_payload = to_json(ans);
        std::string list;
        for (const auto& c : ans.candidates) list += (list.empty() ? "" : ", ") + c;
        a.text = "No exact match for " + code + ". Did you mean: " + list + "?";
        return;
    }

    const auto classes = segments_for_intent(Intent::error_code_lookup);
    auto q = parts_.embedder->embed(code);
    auto ctx = retrieve(q, scope.classes, classes, parts_.config.k_default, &a.segments_queried);
    for (const auto& h : ctx.hits) a.retrieved.push_back(h.hit);
    a.confidence = ctx.hits.empty() ? 0.0 : ctx.hits.front().hit.score;
    tools::ErrorCodeAnswer ans;
    ans.query_code = code;
    if (!ctx.hits.empty() && a.confidence >= parts_.config.tau_ground) {
        ans.tier = tools::LookupTier::related;
        for (const auto& h : ctx.hits) ans.related.push_back(h.hit);
        auto gen = ExtractiveGenerator(parts_.config.answer_budget).generate(ctx, code, parts_.config.corpus_language);
        a.text = "No catalog entry matches " + code + ". Related catalog information:\n" + gen.text;
        a.citations = std::move(gen.citations);
        a.grounded = !a.citations.empty();
    } else {
        ans.tier = tools::LookupTier::not_found;
        a.text = "Error code " + code + " was not found in the catalog.";
    }
    a.tool_payload = to_json(ans);
}

void RagEngine::answer_log_analysis(RagAnswer& a) const {
    a.kind = AnswerKind::tool;
    a.tool = "log_analysis";
    auto formats = tools::log_format_names();
    std::string list;
    for (const auto& f : formats) list += (list.empty() ? "" : ", ") + f;
    a.text = "To analyze a device log, upload the file to /v1/logs/analyze. Supported formats: " + list + ".";
    a.tool_payload = {{"action", "upload_log"}, {"endpoint", "/v1/logs/analyze"}, {"formats", formats}};
}

void RagEngine::answer_self_test(RagAnswer& a, const Scope& scope) const {
    a.kind = AnswerKind::tool;
    a.tool = "self_test";
    const auto& lib = parts_.tools.selftest;
    if (scope.models.size() != 1) {
        a.text = "Name the device model to start a guided self-test.";
        a.tool_payload = {{"action", "choose_device"}, {"device_models", scope.models}};
        return;
    }
    const auto& model = scope.models.front();
    a.device_model = model;
    if (!lib || !lib->has(model)) {
        a.text = "No self-test script is available for " + model + ".";
        a.tool_payload = {{"action", "none"}, {"device_model", model}};
        return;
    }
    auto script = lib->find(model);
    auto endpoint = "/v1/selftest/" + model + "/start";
    a.text = "A guided self-test with " + std::to_string(script->steps.size()) + " steps is available for " + model +
             ". Start it with POST " + endpoint + ".";
    if (!script->steps.empty()) a.text += "\nFirst step: " + script->steps.front().instruction;
    a.tool_payload = {{"action", "start_selftest"},
                      {"device_model", model},
                      {"steps", script->steps.size()},
                      {"endpoint", endpoint}};
}

void RagEngine::answer_maintenance(RagAnswer& a, const Scope& scope) const {
    a.kind = AnswerKind::tool;
    a.tool = "maintenance_schedule";
    const auto& lib = parts_.tools.maintenance;
    if (scope.models.size() != 1) {
        a.text = "Name the device model to build a maintenance plan.";
        a.tool_payload = {{"action", "choose_device"}, {"device_models", scope.models}};
        return;
    }
    const auto& model = scope.models.front();
    a.device_model = model;
    if (!lib || !lib->has(model)) {
        a.text = "No maintenance profile is available for " + model + ".";
        a.tool_payload = {{"action", "none"}, {"device_model", model}};
        return;
    }
    auto plan = tools::generate_maintenance_plan(*lib->find(model), parts_.config.maintenance_horizon_days,
                                                 to_date(parts_.clock()));
    a.text = "Maintenance plan for " + model + " over the next " + std::to_string(plan.horizon_days) + " days:";
    std::set<std::string> cited;
    for (const auto& t : plan.tasks) {
        a.text += "\n- " + t.title + ": every " + std::to_string(t.interval_days) + " days, next due " +
                  format_date(t.next_due);
        if (t.source != "profile" && parts_.kb->chunk(t.source) && cited.insert(t.source).second) {
            a.text += " [" + t.source + "]";
            auto rec = parts_.kb->chunk(t.source);
            a.retrieved.push_back({t.source, 1.0, std::string(corpus::doc_class_name(rec->doc_class))});
            a.citations.push_back(t.source);
        }
    }
    a.grounded = !a.citations.empty();
    a.confidence = a.grounded ? 1.0 : 0.0;
    a.tool_payload = to_json(plan);
    a.tool_payload["action"] = "maintenance_plan";
    a.tool_payload["ics_endpoint"] = "/v1/maintenance/" + model + "/plan.ics";
}

void RagEngine::finish_language(RagAnswer& a) const {
    if (a.kind == AnswerKind::refusal) return;
    auto loc = localize(a.text, parts_.config.corpus_language, a.request_language, *parts_.translator);
    a.text = std::move(loc.text);
    a.language = std::move(loc.language);
    a.untranslated = loc.untranslated;
}

RagAnswer RagEngine::answer_query(const QueryRequest& request) const {
    const auto t0 = std::chrono::steady_clock::now();
    if (trim(request.text).empty()) throw Error(Errc::EmptyQuery, "query is blank");
    if (request.k && *request.k < 1) throw Error(Errc::InvalidArgument, "k must be at least 1");

    RagAnswer a;
    a.answer_id = make_answer_id(request);
    a.request_language = request.language && !request.language->empty()
                             ? *request.language
                             : parts_.detector.detect(request.text).tag;
    a.language = a.request_language;
    auto scope = scope_for(request);
    if (request.device_model) a.device_model = request.device_model;

    std::unordered_set<std::string> codes;
    for (const auto& m : scope.models) {
        if (auto c = parts_.kb->catalog(m)) {
            for (const auto& [code, _] : c->entries()) codes.insert(code);
        }
    }
    auto decision = router()->classify(request.text, codes, request.device_model);
    a.intent = decision.intent;
    a.intent_confidence = decision.confidence;

    std::vector<corpus::DocClass> classes;
    if (request.requested_segments) {
        for (const auto& name : *request.requested_segments) {
            auto cls = corpus::parse_doc_class(name);
            if (!cls) throw Error(Errc::InvalidArgument, "unknown segment " + name);
            classes.push_back(*cls);
        }
    }

    switch (decision.intent) {
        case Intent::error_code_lookup:
            answer_error_code(a, *decision.code, scope);
            break;
        case Intent::log_analysis:
            answer_log_analysis(a);
            break;
        case Intent::self_test:
            answer_self_test(a, scope);
            break;
        case Intent::maintenance_schedule:
            answer_maintenance(a, scope);
            break;
        case Intent::forum_search: {
            if (classes.empty()) {
                bool community_empty = true;
                for (const auto& dc : scope.classes) {
                    const auto* seg = parts_.kb->segment(dc, corpus::DocClass::community);
                    if (seg && seg->size() > 0) community_empty = false;
                }
                classes = segments_for_intent(community_empty ? Intent::instructional : Intent::forum_search);
            }
            answer_rag(a, request, scope, classes);
            break;
        }
        case Intent::unknown:
            a.low_confidence = true;
            [[fallthrough]];
        case Intent::instructional:
            if (classes.empty()) classes = segments_for_intent(Intent::instructional);
            answer_rag(a, request, scope, classes);
            break;
    }
    finish_language(a);

    a.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return a;
}

}  // namespace bmet::rag
