#include "bmet/rag/json_codec.hpp"

#include "bmet/common/error.hpp"

namespace bmet::rag {

Json to_json(const embedding::EmbedderSpec& spec) {
    return Json{{"provider", embedding::provider_name(spec.provider)},
                {"dimension", spec.dimension},
                {"ngram_min", spec.ngram_min},
                {"ngram_max", spec.ngram_max},
                {"seed", spec.seed}};
}

embedding::EmbedderSpec embedder_spec_from_json(const Json& j) {
    embedding::EmbedderSpec s;
    auto p = embedding::parse_provider(j.at("provider").get<std::string>());
    if (!p) throw Error(Errc::CorruptFile, "unknown embedder provider");
    s.provider = *p;
    s.dimension = j.at("dimension").get<std::uint32_t>();
    s.ngram_min = j.at("ngram_min").get<std::uint32_t>();
    s.ngram_max = j.at("ngram_max").get<std::uint32_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

Json to_json(const vecstore::HnswParams& p) {
    return Json{{"M", p.M}, {"ef_construction", p.ef_construction}, {"ef_search", p.ef_search},
                {"level_seed", p.level_seed}};
}

vecstore::HnswParams hnsw_params_from_json(const Json& j) {
    vecstore::HnswParams p;
    p.M = j.at("M").get<std::uint32_t>();
    p.ef_construction = j.at("ef_construction").get<std::uint32_t>();
    p.ef_search = j.at("ef_search").get<std::uint32_t>();
    p.level_seed = j.at("level_seed").get<std::uint64_t>();
    return p;
}

Json to_json(const ChunkRecord& c) {
    return Json{{"chunk_id", c.chunk_id},
                {"doc_id", c.doc_id},
                {"doc_title", c.doc_title},
                {"device_model", c.device_model},
                {"doc_class", corpus::doc_class_name(c.doc_class)},
                {"heading_path", c.heading_path},
                {"text", c.text}};
}

ChunkRecord chunk_record_from_json(const Json& j) {
    ChunkRecord c;
    c.chunk_id = j.at("chunk_id").get<std::string>();
    c.doc_id = j.at("doc_id").get<std::string>();
    c.doc_title = j.at("doc_title").get<std::string>();
    c.device_model = j.at("device_model").get<std::string>();
    auto cls = corpus::parse_doc_class(j.at("doc_class").get<std::string>());
    if (!cls) throw Error(Errc::CorruptFile, "unknown doc_class in chunk table");
    c.doc_class = *cls;
    c.heading_path = j.at("heading_path").get<std::vector<std::string>>();
    c.text = j.at("text").get<std::string>();
    return c;
}

Json to_json(const corpus::ErrorCodeEntry& e) {
    return Json{{"code", e.code},
                {"raw_code", e.raw_code},
                {"description", e.description},
                {"causes", e.causes},
                {"corrective_actions", e.corrective_actions},
                {"source_chunk_id", e.source_chunk_id}};
}

corpus::ErrorCodeEntry error_entry_from_json(const Json& j) {
    corpus::ErrorCodeEntry e;
    e.code = j.at("code").get<std::string>();
    e.raw_code = j.at("raw_code").get<std::string>();
    e.description = j.at("description").get<std::string>();
    e.causes = j.at("causes").get<std::vector<std::string>>();
    e.corrective_actions = j.at("corrective_actions").get<std::vector<std::string>>();
    e.source_chunk_id = j.at("source_chunk_id").get<std::string>();
    return e;
}

Json to_json(const vecstore::SearchHit& h) {
    return Json{{"chunk_id", h.chunk_id}, {"score", h.score}, {"segment", h.segment_name}};
}

}  // namespace bmet::rag

namespace bmet::rag {

Json to_json(const tools::ErrorCodeAnswer& a) {
    Json j{{"tier", tools::lookup_tier_name(a.tier)},
           {"code", a.query_code},
           {"definitive", a.definitive()},
           {"candidates", a.candidates},
           {"related", Json::array()}};
    if (a.entry) j["entry"] = to_json(*a.entry);
    for (const auto& h : a.related) j["related"].push_back(to_json(h));
    return j;
}

Json to_json(const tools::LogReport& r) {
    Json sev = Json::object();
    for (std::size_t i = 0; i < tools::kSeverityCount; ++i)
        sev[std::string(tools::severity_name(static_cast<tools::Severity>(i)))] = r.counts_by_severity[i];
    Json codes = Json::array();
    for (const auto& c : r.top_codes) {
        Json cj{{"code", c.code}, {"count", c.count}, {"catalog_match", c.catalog_match}};
        if (c.description) cj["description"] = *c.description;
        codes.push_back(std::move(cj));
    }
    Json j{{"total_lines", r.total_lines},
           {"parsed", r.parsed},
           {"malformed", r.malformed},
           {"counts_by_severity", sev},
           {"defaulted_severity", r.defaulted_severity},
           {"top_codes", codes},
           {"time_range", nullptr}};
    if (r.time_range)
        j["time_range"] = Json{{"first", format_iso8601(r.time_range->first)},
                               {"last", format_iso8601(r.time_range->second)}};
    return j;
}

Json to_json(const tools::SelfTestStep& s) {
    return Json{{"step_id", s.step_id}, {"instruction", s.instruction}, {"expected", s.expected}};
}

Json to_json(const tools::SelfTestReport& r) {
    Json trace = Json::array();
    for (const auto& t : r.trace) {
        auto j = to_json(t.step);
        j["index"] = t.index;
        j["result"] = tools::step_result_name(t.result);
        trace.push_back(std::move(j));
    }
    return Json{{"device_model", r.device_model},
                {"pass", r.passed},
                {"fail", r.failed},
                {"skipped", r.skipped},
                {"trace", trace}};
}

Json to_json(const tools::SelfTestSession& s) {
    Json j{{"session_id", s.session_id()},
           {"device_model", s.script().device_model},
           {"state", tools::session_state_name(s.state())},
           {"cursor", s.cursor()},
           {"total_steps", s.script().steps.size()},
           {"current_step", nullptr}};
    if (const auto* step = s.current_step()) j["current_step"] = to_json(*step);
    if (s.complete()) j["report"] = to_json(s.report());
    return j;
}

Json to_json(const tools::MaintenancePlan& p) {
    Json tasks = Json::array();
    for (const auto& t : p.tasks) {
        tasks.push_back(Json{{"task_id", t.task_id},
                             {"title", t.title},
                             {"interval_days", t.interval_days},
                             {"next_due", format_date(t.next_due)},
                             {"source", t.source}});
    }
    Json events = Json::array();
    for (const auto& e : p.events) {
        events.push_back(Json{{"uid", e.uid}, {"task_id", e.task_id}, {"title", e.title}, {"date", format_date(e.date)}});
    }
    return Json{{"device_model", p.device_model},
                {"created", format_date(p.created)},
                {"horizon_days", p.horizon_days},
                {"tasks", tasks},
                {"events", events}};
}

Json to_json(const RagAnswer& a) {
    Json hits = Json::array();
    for (const auto& h : a.retrieved) hits.push_back(to_json(h));
    Json j{{"answer_id", a.answer_id},
           {"kind", answer_kind_name(a.kind)},
           {"text", a.text},
           {"citations", a.citations},
           {"grounded", a.grounded},
           {"confidence", a.confidence},
           {"latency_ms", a.latency_ms},
           {"language", a.language},
           {"request_language", a.request_language},
           {"intent", router::intent_name(a.intent)},
           {"intent_confidence", a.intent_confidence},
           {"device_model", a.device_model ? Json(*a.device_model) : Json(nullptr)},
           {"retrieved", std::move(hits)},
           {"segments_queried", a.segments_queried},
           {"low_confidence", a.low_confidence},
           {"degraded", a.degraded},
           {"citations_stripped", a.citations_stripped},
           {"untranslated", a.untranslated}};
    if (a.kind == AnswerKind::tool) {
        j["tool"] = a.tool;
        j["tool_payload"] = a.tool_payload;
    }
    return j;
}

}  // namespace bmet::rag
