#include "bmet/eval/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/server/http.hpp"
#include "bmet/vecstore/kernels.hpp"

namespace bmet::eval {

using Json = nlohmann::json;

std::string_view suite_name(Suite s) noexcept {
    switch (s) {
        case Suite::error_code: return "error_code";
        case Suite::instructional: return "instructional";
        case Suite::ann_recall: return "ann_recall";
        case Suite::latency: return "latency";
    }
    return "error_code";
}

std::optional<Suite> parse_suite(std::string_view s) noexcept {
    for (auto v : {Suite::error_code, Suite::instructional, Suite::ann_recall, Suite::latency})
        if (suite_name(v) == s) return v;
    return std::nullopt;
}

std::vector<EvalCase> parse_instructional_cases(std::string_view text) {
    std::vector<EvalCase> out;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto f = split(t, '|');
        if (f.size() < 3)
            throw Error(Errc::InvalidArgument, "case line " + std::to_string(line_no) + ": expected id | query | gold");
        EvalCase c;
        c.case_id = std::string(trim(f[0]));
        c.query = std::string(trim(f[1]));
        c.gold_chunk_id = std::string(trim(f[2]));
        if (c.case_id.empty() || c.query.empty() || c.gold_chunk_id->empty())
            throw Error(Errc::InvalidArgument, "case line " + std::to_string(line_no) + ": empty field");
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<EvalCase> load_instructional_cases(const std::filesystem::path& path) {
    return parse_instructional_cases(read_file(path));
}

LatencySummary summarize_latency(std::vector<double> s) {
    LatencySummary out;
    if (s.empty()) return out;
    std::sort(s.begin(), s.end());
    double sum = 0.0;
    for (double v : s) sum += v;
    auto rank = [&](double p) {
        auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(s.size())));
        return s[std::clamp<std::size_t>(idx, 1, s.size()) - 1];
    };
    out.mean_ms = sum / static_cast<double>(s.size());
    out.p50_ms = rank(0.50);
    out.p95_ms = rank(0.95);
    out.max_ms = s.back();
    return out;
}

void EvalReport::finalize() {
    n_cases = outcomes.size();
    n_correct = static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(),
                                                       [](const CaseOutcome& o) { return o.correct; }));
    metric = n_cases ? static_cast<double>(n_correct) / static_cast<double>(n_cases) : 0.0;
    std::vector<double> lat;
    for (const auto& o : outcomes) lat.push_back(o.latency_ms);
    latency = summarize_latency(std::move(lat));
}

std::string report_jsonl(const EvalReport& r) {
    std::string out;
    Json header{{"record", "report"},     {"suite", suite_name(r.suite)}, {"metric", r.metric_name},
                {"value", r.metric},      {"n_cases", r.n_cases},       {"n_correct", r.n_correct},
                {"seed", r.seed},         {"params", r.params}};
    if (!r.metric_note.empty()) header["note"] = r.metric_note;
    out += header.dump() + "\n";
    for (const auto& o : r.outcomes) {
        Json j{{"record", "case"},     {"case_id", o.case_id}, {"query", o.query},
               {"expected", o.expected}, {"got", o.got},       {"correct", o.correct}};
        if (!o.flags.empty()) j["flags"] = o.flags;
        out += j.dump() + "\n";
    }
    for (const auto& e : r.extra) out += e.dump() + "\n";
    return out;
}

std::string timing_jsonl(const EvalReport& r, Timestamp generated_at) {
    Json j{{"record", "timing"},
           {"suite", suite_name(r.suite)},
           {"generated_at", format_iso8601(generated_at)},
           {"wall_seconds", r.wall_seconds},
           {"latency_ms",
            {{"mean", r.latency.mean_ms}, {"p50", r.latency.p50_ms}, {"p95", r.latency.p95_ms}, {"max", r.latency.max_ms}}}};
    return j.dump() + "\n";
}

std::string summary_table(const EvalReport& r) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(4);
    o << "suite        " << suite_name(r.suite) << "\n"
      << "metric       " << r.metric_name << " = " << r.metric << "  (" << r.n_correct << "/" << r.n_cases << ")\n";
    if (!r.metric_note.empty()) o << "note         " << r.metric_note << "\n";
    o.precision(2);
    o << "latency ms   mean " << r.latency.mean_ms << "  p50 " << r.latency.p50_ms << "  p95 " << r.latency.p95_ms
      << "  max " << r.latency.max_ms << "\n"
      << "wall s       " << r.wall_seconds << "\n";
    std::size_t shown = 0;
    for (const auto& o2 : r.outcomes) {
        if (o2.correct) continue;
        if (shown++ == 0) o << "misses:\n";
        if (shown > 20) {
            o << "  ...\n";
            break;
        }
        o << "  " << o2.case_id << "  expected " << o2.expected << "  got " << o2.got;
        for (const auto& f : o2.flags) o << "  [" << f << "]";
        o << "\n";
    }
    for (const auto& e : r.extra) o << e.dump() << "\n";
    return o.str();
}

void write_report(const EvalReport& r, const std::filesystem::path& out, Timestamp generated_at) {
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    write_file_atomic(out, report_jsonl(r));
    auto timing = out;
    timing += ".timing.jsonl";
    write_file_atomic(timing, timing_jsonl(r, generated_at));
}

namespace {

using SteadyClock = std::chrono::steady_clock;

double ms_since(SteadyClock::time_point t0) {
    return std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
}

}  // namespace

EvalReport run_error_code_eval(const rag::RagEngine& engine, const std::string& device_model,
                               const tools::ErrorCatalog& truth, std::uint64_t seed) {
    auto t0 = SteadyClock::now();
    EvalReport r;
    r.suite = Suite::error_code;
    r.metric_name = "precision";
    r.metric_note = "exact match of the returned description against the catalog entry";
    r.seed = seed;
    r.params = {{"device_model", device_model}, {"template", "What does {code} mean?"}};

    std::vector<const corpus::ErrorCodeEntry*> entries;
    for (const auto& [code, e] : truth.entries()) entries.push_back(&e);
    r.outcomes.resize(entries.size());

#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = *entries[i];
        auto& o = r.outcomes[i];
        o.case_id = e.code;
        o.query = "What does " + e.code + " mean?";
        o.expected = e.description;
        auto c0 = SteadyClock::now();
        try {
            rag::QueryRequest q;
            q.text = o.query;
            q.device_model = device_model;
            auto a = engine.answer_query(q);
            const auto& p = a.tool_payload;
            if (a.kind == rag::AnswerKind::tool && p.is_object() && p.contains("entry")) {
                o.got = p["entry"].value("description", "");
                o.correct = o.got == e.description;
            } else {
                o.got = std::string(rag::answer_kind_name(a.kind)) + ":" + std::string(router::intent_name(a.intent));
                if (p.is_object() && p.contains("tier")) o.flags.push_back("tier=" + p["tier"].get<std::string>());
            }
        } catch (const std::exception& ex) {
            o.got = std::string("error: ") + ex.what();
        }
        o.latency_ms = ms_since(c0);
    }
    r.finalize();
    r.wall_seconds = ms_since(t0) / 1000.0;
    return r;
}

EvalReport run_instructional_eval(const rag::RagEngine& engine, const std::vector<EvalCase>& cases,
                                  std::optional<std::string> device_model, std::uint64_t seed) {
    auto t0 = SteadyClock::now();
    EvalReport r;
    r.suite = Suite::instructional;
    r.metric_name = "accuracy";
    r.metric_note = "proxy: correct iff the gold chunk id is among the answer citations (no human rating)";
    r.seed = seed;
    r.params = {{"k", engine.config().k_default}, {"tau_ground", engine.config().tau_ground}};
    if (device_model) r.params["device_model"] = *device_model;
    r.outcomes.resize(cases.size());

#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        auto& o = r.outcomes[i];
        o.case_id = c.case_id;
        o.query = c.query;
        o.expected = c.gold_chunk_id.value_or("");
        if (!engine.knowledge_base().chunk(o.expected)) o.flags.push_back("missing_gold");
        auto c0 = SteadyClock::now();
        try {
            rag::QueryRequest q;
            q.text = c.query;
            q.device_model = c.device_model ? c.device_model : device_model;
            auto a = engine.answer_query(q);
            std::string got;
            for (const auto& id : a.citations) got += (got.empty() ? "" : ",") + id;
            o.got = got.empty() ? std::string(rag::answer_kind_name(a.kind)) : got;
            o.correct = o.flags.empty() &&
                        std::find(a.citations.begin(), a.citations.end(), o.expected) != a.citations.end();
            if (!o.correct && a.kind != rag::AnswerKind::rag)
                o.flags.push_back("answered_as=" + std::string(rag::answer_kind_name(a.kind)) + ":" +
                                  std::string(router::intent_name(a.intent)));
        } catch (const std::exception& ex) {
            o.got = std::string("error: ") + ex.what();
        }
        o.latency_ms = ms_since(c0);
    }
    r.finalize();
    r.wall_seconds = ms_since(t0) / 1000.0;
    return r;
}

std::vector<float> random_unit_vectors(std::size_t n, std::size_t dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<float> out(n * dims);
    for (std::size_t i = 0; i < n; ++i) {
        double norm = 0.0;
        std::vector<double> v(dims);
        for (auto& x : v) {
            x = nd(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (std::size_t d = 0; d < dims; ++d) out[i * dims + d] = static_cast<float>(v[d] / norm);
    }
    return out;
}

namespace {

// Exact top-k by inner product, ties by lower index.
std::vector<std::uint32_t> flat_top_k(std::span<const float> data, std::size_t dims, std::span<const float> q,
                                      std::size_t k) {
    std::vector<double> scores(data.size() / dims);
    vecstore::score_rows_serial(data, dims, q, scores);
    std::vector<std::uint32_t> idx(scores.size());
    for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
    idx.resize(k);
    return idx;
}

}  // namespace

EvalReport run_ann_recall_eval(const AnnRecallParams& p) {
    if (p.n_vectors < 1000) throw Error(Errc::InvalidArgument, "ann_recall needs at least 1000 vectors");
    if (p.k < 1 || p.k > p.n_vectors || p.dims < 1 || p.n_queries < 1)
        throw Error(Errc::InvalidArgument, "ann_recall parameters out of range");
    p.hnsw.validate();
    auto t0 = SteadyClock::now();

    EvalReport r;
    r.suite = Suite::ann_recall;
    r.metric_name = "recall@" + std::to_string(p.k);
    r.metric_note = "HNSW top-k against exact flat search over seeded random unit vectors";
    r.seed = p.seed;
    r.params = {{"n_vectors", p.n_vectors},
                {"dims", p.dims},
                {"k", p.k},
                {"n_queries", p.n_queries},
                {"M", p.hnsw.M},
                {"ef_construction", p.hnsw.ef_construction},
                {"ef_search", p.hnsw.ef_search},
                {"level_seed", p.hnsw.level_seed},
                {"queries", p.queries_from_data ? "inserted" : "held_out"}};

    auto data = random_unit_vectors(p.n_vectors, p.dims, p.seed);
    std::vector<float> queries;
    if (p.queries_from_data) {
        for (std::size_t i = 0; i < p.n_queries; ++i) {
            auto row = (i * 7919) % p.n_vectors;
            queries.insert(queries.end(), data.begin() + static_cast<std::ptrdiff_t>(row * p.dims),
                           data.begin() + static_cast<std::ptrdiff_t>((row + 1) * p.dims));
        }
    } else {
        queries = random_unit_vectors(p.n_queries, p.dims, p.seed ^ 0x9e3779b97f4a7c15ULL);
    }

    const std::size_t dims = p.dims;
    vecstore::HnswGraph graph(p.hnsw);
    vecstore::HnswGraph::VectorAt at = [&](std::uint32_t i) {
        return std::span<const float>(data.data() + static_cast<std::size_t>(i) * dims, dims);
    };
    for (std::size_t i = 0; i < p.n_vectors; ++i) graph.add(at);

    auto query_at = [&](std::size_t qi) { return std::span<const float>(queries.data() + qi * dims, dims); };
    std::vector<std::vector<std::uint32_t>> truth(p.n_queries);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t qi = 0; qi < p.n_queries; ++qi) truth[qi] = flat_top_k(data, dims, query_at(qi), p.k);

    auto accept_all = [](std::uint32_t) { return true; };
    // found[qi][j]: whether the j-th true neighbor of query qi came back.
    auto recall_at = [&](std::size_t ef, std::vector<std::vector<char>>* found_out, std::vector<double>* lat_out) {
        std::vector<std::vector<char>> found(p.n_queries, std::vector<char>(p.k, 0));
        std::vector<double> lat(p.n_queries);
#pragma omp parallel for schedule(dynamic)
        for (std::size_t qi = 0; qi < p.n_queries; ++qi) {
            auto c0 = SteadyClock::now();
            auto res = graph.search(query_at(qi), std::max(ef, p.k), at, accept_all);
            lat[qi] = ms_since(c0);
            if (res.size() > p.k) res.resize(p.k);
            for (std::size_t j = 0; j < p.k; ++j)
                for (const auto& [s, id] : res)
                    if (id == truth[qi][j]) found[qi][j] = 1;
        }
        std::size_t total = 0;
        for (const auto& f : found)
            for (char c : f) total += c ? 1 : 0;
        if (found_out) *found_out = std::move(found);
        if (lat_out) *lat_out = std::move(lat);
        return static_cast<double>(total) / static_cast<double>(p.n_queries * p.k);
    };

    std::vector<std::vector<char>> found;
    std::vector<double> lat;
    recall_at(p.hnsw.ef_search, &found, &lat);
    // One outcome per (query, true neighbor) so that metric = n_correct / n_cases.
    for (std::size_t qi = 0; qi < p.n_queries; ++qi) {
        for (std::size_t j = 0; j < p.k; ++j) {
            CaseOutcome o;
            o.case_id = "q" + std::to_string(qi) + "/" + std::to_string(j);
            o.expected = std::to_string(truth[qi][j]);
            o.correct = found[qi][j] != 0;
            o.got = o.correct ? "found" : "missed";
            r.outcomes.push_back(std::move(o));
        }
    }
    for (auto ef : p.ef_sweep) {
        r.extra.push_back({{"record", "sweep"}, {"ef_search", ef}, {"recall", recall_at(ef, nullptr, nullptr)}});
    }
    r.finalize();
    r.latency = summarize_latency(std::move(lat));
    r.wall_seconds = ms_since(t0) / 1000.0;
    return r;
}

std::vector<std::string> latency_queries(const std::vector<EvalCase>& instructional, const tools::ErrorCatalog* catalog,
                                         std::size_t n_codes) {
    std::vector<std::string> out;
    for (const auto& c : instructional) out.push_back(c.query);
    if (catalog) {
        std::size_t n = 0;
        for (const auto& [code, _] : catalog->entries()) {
            if (n++ >= n_codes) break;
            out.push_back("What does " + code + " mean?");
        }
    }
    for (const char* q : {"I need to analyze the system log file", "Start the self test for this scanner",
                          "When is the next preventive maintenance due?", "zqxv kjw"})
        out.emplace_back(q);
    return out;
}

EvalReport run_latency_eval(const std::string& host, int port, const std::vector<std::string>& queries,
                            std::optional<std::string> device_model, std::uint64_t seed) {
    auto t0 = SteadyClock::now();
    EvalReport r;
    r.suite = Suite::latency;
    r.metric_name = "success_rate";
    r.metric_note = "end-to-end POST /v1/query round trips, issued sequentially";
    r.seed = seed;
    r.params = {{"n_queries", queries.size()}};
    if (device_model) r.params["device_model"] = *device_model;

    httplib::Client client(host, port);
    client.set_keep_alive(true);
    client.set_tcp_nodelay(true);
    client.set_read_timeout(30, 0);
    // Sequential on purpose: concurrent requests would measure queueing, not latency.
    for (std::size_t i = 0; i < queries.size(); ++i) {
        CaseOutcome o;
        o.case_id = "lat-" + std::to_string(i + 1);
        o.query = queries[i];
        o.expected = "200";
        Json body{{"text", queries[i]}};
        if (device_model) body["device_model"] = *device_model;
        auto c0 = SteadyClock::now();
        auto res = client.Post("/v1/query", body.dump(), "application/json");
        o.latency_ms = ms_since(c0);
        o.got = res ? std::to_string(res->status) : "transport:" + httplib::to_string(res.error());
        o.correct = res && res->status == 200;
        r.outcomes.push_back(std::move(o));
    }
    r.finalize();
    r.wall_seconds = ms_since(t0) / 1000.0;
    return r;
}

EvalReport run_latency_eval(server::Desk& desk, const std::vector<std::string>& queries,
                            std::optional<std::string> device_model, std::uint64_t seed) {
    server::HttpService svc(desk);
    int port = svc.bind("127.0.0.1", 0);
    std::thread t([&] { svc.run(); });
    EvalReport r;
    try {
        auto deadline = SteadyClock::now() + std::chrono::seconds(10);
        while (!svc.running()) {
            if (SteadyClock::now() > deadline) throw Error(Errc::IoError, "service did not start");
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
        r = run_latency_eval("127.0.0.1", port, queries, std::move(device_model), seed);
    } catch (...) {
        svc.stop();
        t.join();
        throw;
    }
    svc.stop();
    t.join();
    return r;
}

}  // namespace bmet::eval
