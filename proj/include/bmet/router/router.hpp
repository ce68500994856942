#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bmet/embedding/embedder.hpp"

namespace bmet::router {

enum class Intent {
    error_code_lookup,
    instructional,
    log_analysis,
    self_test,
    maintenance_schedule,
    forum_search,
    unknown,
};

inline constexpr std::array kRoutableIntents{Intent::error_code_lookup, Intent::instructional,
                                             Intent::log_analysis,      Intent::self_test,
                                             Intent::maintenance_schedule, Intent::forum_search};

std::string_view intent_name(Intent i) noexcept;
std::optional<Intent> parse_intent(std::string_view s) noexcept;

struct RoutingDecision {
    Intent intent = Intent::unknown;
    double confidence = 0.0;
    std::optional<std::string> code;          // normalized error code slot
    std::optional<std::string> device_model;  // carried from the session
    std::optional<std::string> matched_exemplar_id;
};

struct RouterConfig {
    double tau_intent = 0.15;
    // Applied to normalized single tokens; a match forces error_code_lookup.
    // Three digits at most, so model names such as SV-5000 do not match.
    std::string code_pattern = R"(^[A-Z]{1,4}-[0-9]{2,3}$)";
    // A token holding a digit within this edit distance of a catalog code is
    // taken as a mistyped code (lookup then answers with a disambiguation list).
    std::size_t near_miss_distance = 1;
};

struct ExemplarSet {
    std::vector<std::string> phrases;
    std::vector<embedding::EmbeddingVector> embeddings;
    embedding::EmbeddingVector centroid;
};

// Exemplar file: one `intent | phrase` record per line, '#' comments.
std::map<Intent, std::vector<std::string>> parse_exemplars(std::string_view text);
std::string format_exemplars(const std::map<Intent, std::vector<std::string>>& exemplars);

// Rule-first, embedding-second intent classifier. Stage one extracts error-code
// slots; stage two picks the nearest per-intent exemplar centroid.
class IntentRouter {
public:
    IntentRouter(std::shared_ptr<const embedding::Embedder> embedder, RouterConfig config = {});

    const RouterConfig& config() const noexcept { return config_; }

    // Replaces the exemplars of one intent. Throws Error(TooFewExemplars) below 3
    // phrases and Error(UnknownIntent) for Intent::unknown.
    void register_exemplars(Intent intent, std::vector<std::string> phrases);
    void load_exemplars(const std::map<Intent, std::vector<std::string>>& exemplars);
    void load_exemplar_file(const std::filesystem::path& path);
    std::map<Intent, std::vector<std::string>> exemplars() const;
    std::optional<embedding::EmbeddingVector> centroid(Intent intent) const;

    // Throws Error(EmptyQuery) for blank input.
    RoutingDecision classify(std::string_view query, const std::unordered_set<std::string>& catalog_codes,
                             std::optional<std::string> device_model = std::nullopt) const;

    // Stage-one slot extraction only: a catalog code, else a code-pattern token,
    // else a near miss of a catalog code.
    std::optional<std::string> extract_code(std::string_view query,
                                            const std::unordered_set<std::string>& catalog_codes) const;

    // Cosine of the query against every registered centroid.
    std::vector<std::pair<Intent, double>> centroid_similarities(std::string_view query) const;

private:
    std::shared_ptr<const embedding::Embedder> embedder_;
    RouterConfig config_;
    std::regex code_regex_;
    mutable std::shared_mutex mu_;
    std::map<Intent, ExemplarSet> sets_;
};

}  // namespace bmet::router
