#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bmet/rag/engine.hpp"
#include "bmet/server/desk.hpp"
#include "bmet/tools/error_lookup.hpp"
#include "bmet/vecstore/hnsw.hpp"

namespace bmet::eval {

enum class Suite { error_code, instructional, ann_recall, latency };
std::string_view suite_name(Suite s) noexcept;
std::optional<Suite> parse_suite(std::string_view s) noexcept;

struct EvalCase {
    std::string case_id;
    std::string query;
    std::optional<std::string> gold_code;
    std::optional<std::string> gold_chunk_id;
    std::optional<std::string> device_model;
    Suite suite = Suite::instructional;
};

// `case_id | query | gold_chunk_id [| anchor]`, '#' comments. Throws
// Error(InvalidArgument) on a malformed line.
std::vector<EvalCase> parse_instructional_cases(std::string_view text);
std::vector<EvalCase> load_instructional_cases(const std::filesystem::path& path);

struct CaseOutcome {
    std::string case_id;
    std::string query;
    std::string expected;
    std::string got;
    bool correct = false;
    std::vector<std::string> flags;  // e.g. "missing_gold"
    double latency_ms = 0.0;
};

struct LatencySummary {
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double max_ms = 0.0;
};

// Nearest-rank percentiles.
LatencySummary summarize_latency(std::vector<double> samples_ms);

struct EvalReport {
    Suite suite = Suite::error_code;
    std::string metric_name;  // precision, accuracy, recall@k, success_rate
    std::string metric_note;
    std::size_t n_cases = 0;
    std::size_t n_correct = 0;
    double metric = 0.0;  // n_correct / n_cases
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();
    std::vector<CaseOutcome> outcomes;
    nlohmann::json extra = nlohmann::json::array();  // additional records, e.g. an ef sweep

    // Run-dependent values; kept out of the report body.
    LatencySummary latency;
    double wall_seconds = 0.0;

    void finalize();  // recomputes n_cases, n_correct, metric and latency from outcomes
};

// Report body: a header record, one record per case, then extra records.
// Identical inputs give byte-identical output.
std::string report_jsonl(const EvalReport& r);
// Latencies and wall time; everything that varies between runs.
std::string timing_jsonl(const EvalReport& r, Timestamp generated_at);
std::string summary_table(const EvalReport& r);
// Writes <out> and <out>.timing.jsonl.
void write_report(const EvalReport& r, const std::filesystem::path& out, Timestamp generated_at);

// Asks "What does {code} mean?" for every code of `truth`; correct iff the
// returned entry description equals the catalog's exactly.
EvalReport run_error_code_eval(const rag::RagEngine& engine, const std::string& device_model,
                               const tools::ErrorCatalog& truth, std::uint64_t seed = 0);

// Correct iff the gold chunk is cited. Cases whose gold chunk is absent from
// the knowledge base count as incorrect and carry the missing_gold flag.
EvalReport run_instructional_eval(const rag::RagEngine& engine, const std::vector<EvalCase>& cases,
                                  std::optional<std::string> device_model = std::nullopt, std::uint64_t seed = 0);

struct AnnRecallParams {
    std::size_t n_vectors = 10000;
    std::size_t dims = 256;
    std::size_t k = 10;
    std::size_t n_queries = 200;
    vecstore::HnswParams hnsw;
    std::uint64_t seed = 7;
    bool queries_from_data = false;  // queries are inserted vectors instead of fresh ones
    std::vector<std::size_t> ef_sweep;  // extra ef values reported as sweep records
};

// Random unit vectors from a seeded normal distribution.
std::vector<float> random_unit_vectors(std::size_t n, std::size_t dims, std::uint64_t seed);

// recall@k of HNSW against exact flat search. n_cases = n_queries * k.
// Throws Error(InvalidArgument) for n_vectors < 1000 or k > n_vectors.
EvalReport run_ann_recall_eval(const AnnRecallParams& params);

// Default mix of queries for the latency suite: instructional questions plus
// error-code and tool prompts.
std::vector<std::string> latency_queries(const std::vector<EvalCase>& instructional,
                                         const tools::ErrorCatalog* catalog, std::size_t n_codes = 30);

// Issues every query to POST /v1/query of a live service, one at a time, and
// measures the round trip. Correct iff the response is 200.
EvalReport run_latency_eval(const std::string& host, int port, const std::vector<std::string>& queries,
                            std::optional<std::string> device_model = std::nullopt, std::uint64_t seed = 0);

// Starts an in-process service over the desk on a free loopback port and runs
// run_latency_eval against it.
EvalReport run_latency_eval(server::Desk& desk, const std::vector<std::string>& queries,
                            std::optional<std::string> device_model = std::nullopt, std::uint64_t seed = 0);

}  // namespace bmet::eval
