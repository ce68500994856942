#include "bmet/router/router.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/corpus/normalize.hpp"

namespace bmet::router {

std::string_view intent_name(Intent i) noexcept {
    switch (i) {
        case Intent::error_code_lookup: return "error_code_lookup";
        case Intent::instructional: return "instructional";
        case Intent::log_analysis: return "log_analysis";
        case Intent::self_test: return "self_test";
        case Intent::maintenance_schedule: return "maintenance_schedule";
        case Intent::forum_search: return "forum_search";
        case Intent::unknown: return "unknown";
    }
    return "unknown";
}

std::optional<Intent> parse_intent(std::string_view s) noexcept {
    for (auto i : kRoutableIntents) {
        if (intent_name(i) == s) return i;
    }
    if (s == "unknown") return Intent::unknown;
    return std::nullopt;
}

std::map<Intent, std::vector<std::string>> parse_exemplars(std::string_view text) {
    std::map<Intent, std::vector<std::string>> out;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto bar = t.find('|');
        if (bar == std::string_view::npos)
            throw Error(Errc::InvalidArgument, "exemplar line " + std::to_string(line_no) + ": missing '|'");
        auto name = trim(t.substr(0, bar));
        auto phrase = trim(t.substr(bar + 1));
        auto intent = parse_intent(name);
        if (!intent || *intent == Intent::unknown)
            throw Error(Errc::UnknownIntent, "exemplar line " + std::to_string(line_no) + ": " + std::string(name));
        if (phrase.empty()) continue;
        out[*intent].emplace_back(phrase);
    }
    return out;
}

std::string format_exemplars(const std::map<Intent, std::vector<std::string>>& exemplars) {
    std::string out;
    for (const auto& [intent, phrases] : exemplars) {
        for (const auto& p : phrases) {
            out += intent_name(intent);
            out += " | ";
            out += p;
            out += '\n';
        }
    }
    return out;
}

IntentRouter::IntentRouter(std::shared_ptr<const embedding::Embedder> embedder, RouterConfig config)
    : embedder_(std::move(embedder)), config_(std::move(config)), code_regex_(config_.code_pattern) {
    if (config_.tau_intent < 0.0 || config_.tau_intent > 1.0)
        throw Error(Errc::InvalidConfig, "tau_intent must lie in [0, 1]");
}

void IntentRouter::register_exemplars(Intent intent, std::vector<std::string> phrases) {
    if (intent == Intent::unknown) throw Error(Errc::UnknownIntent, "cannot register exemplars for unknown");
    if (phrases.size() < 3)
        throw Error(Errc::TooFewExemplars, std::string(intent_name(intent)) + " needs at least 3 phrases");

    ExemplarSet set;
    set.embeddings = embedder_->embed_batch(phrases);
    set.phrases = std::move(phrases);
    const std::size_t dim = embedder_->spec().dimension;
    std::vector<double> mean(dim, 0.0);
    for (const auto& e : set.embeddings) {
        for (std::size_t i = 0; i < dim; ++i) mean[i] += e.values[i];
    }
    double norm = 0.0;
    for (double v : mean) norm += v * v;
    norm = std::sqrt(norm);
    set.centroid.values.assign(dim, 0.0f);
    if (norm == 0.0) {
        set.centroid.is_zero = true;
    } else {
        for (std::size_t i = 0; i < dim; ++i) set.centroid.values[i] = static_cast<float>(mean[i] / norm);
    }

    std::unique_lock lock(mu_);
    sets_[intent] = std::move(set);
}

void IntentRouter::load_exemplars(const std::map<Intent, std::vector<std::string>>& exemplars) {
    for (const auto& [intent, phrases] : exemplars) register_exemplars(intent, phrases);
}

void IntentRouter::load_exemplar_file(const std::filesystem::path& path) {
    load_exemplars(parse_exemplars(read_file(path)));
}

std::map<Intent, std::vector<std::string>> IntentRouter::exemplars() const {
    std::shared_lock lock(mu_);
    std::map<Intent, std::vector<std::string>> out;
    for (const auto& [intent, set] : sets_) out[intent] = set.phrases;
    return out;
}

std::optional<embedding::EmbeddingVector> IntentRouter::centroid(Intent intent) const {
    std::shared_lock lock(mu_);
    auto it = sets_.find(intent);
    if (it == sets_.end()) return std::nullopt;
    return it->second.centroid;
}

namespace {

std::string_view strip_punct(std::string_view tok) {
    auto keep = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    while (!tok.empty() && !keep(tok.front())) tok.remove_prefix(1);
    while (!tok.empty() && !keep(tok.back())) tok.remove_suffix(1);
    return tok;
}

std::vector<std::string_view> tokens_of(std::string_view query) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < query.size()) {
        while (i < query.size() && std::isspace(static_cast<unsigned char>(query[i]))) ++i;
        std::size_t j = i;
        while (j < query.size() && !std::isspace(static_cast<unsigned char>(query[j]))) ++j;
        if (j > i) {
            auto tok = strip_punct(query.substr(i, j - i));
            if (!tok.empty()) out.push_back(tok);
        }
        i = j;
    }
    return out;
}

std::optional<std::string> try_normalize(std::string_view s) {
    try {
        return corpus::normalize_code(s);
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

std::optional<std::string> IntentRouter::extract_code(std::string_view query,
                                                      const std::unordered_set<std::string>& catalog_codes) const {
    auto toks = tokens_of(query);
    // Catalog membership wins; token pairs cover codes printed with a space ("e 042").
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (auto n = try_normalize(toks[i]); n && catalog_codes.contains(*n)) return n;
        if (i + 1 < toks.size()) {
            std::string pair = std::string(toks[i]) + " " + std::string(toks[i + 1]);
            if (auto n = try_normalize(pair); n && catalog_codes.contains(*n)) return n;
        }
    }
    for (auto tok : toks) {
        auto n = try_normalize(tok);
        if (n && std::regex_match(*n, code_regex_)) return n;
    }
    if (config_.near_miss_distance == 0) return std::nullopt;
    for (auto tok : toks) {
        if (tok.find_first_of("0123456789") == std::string_view::npos) continue;
        auto n = try_normalize(tok);
        if (!n || n->size() < 3) continue;
        for (const auto& code : catalog_codes) {
            const std::size_t gap = code.size() > n->size() ? code.size() - n->size() : n->size() - code.size();
            if (gap <= config_.near_miss_distance && edit_distance(code, *n) <= config_.near_miss_distance)
                return n;
        }
    }
    return std::nullopt;
}

std::vector<std::pair<Intent, double>> IntentRouter::centroid_similarities(std::string_view query) const {
    const auto q = embedder_->embed(query);
    std::shared_lock lock(mu_);
    std::vector<std::pair<Intent, double>> out;
    for (const auto& [intent, set] : sets_) out.emplace_back(intent, embedding::cosine_similarity(q, set.centroid));
    return out;
}

RoutingDecision IntentRouter::classify(std::string_view query, const std::unordered_set<std::string>& catalog_codes,
                                       std::optional<std::string> device_model) const {
    if (trim(query).empty()) throw Error(Errc::EmptyQuery, "query is blank");
    RoutingDecision decision;
    decision.device_model = std::move(device_model);

    if (auto code = extract_code(query, catalog_codes)) {
        decision.intent = Intent::error_code_lookup;
        decision.confidence = 1.0;
        decision.code = std::move(code);
        return decision;
    }

    const auto q = embedder_->embed(query);
    std::shared_lock lock(mu_);
    double best = -2.0;
    const ExemplarSet* best_set = nullptr;
    for (const auto& [intent, set] : sets_) {
        // error_code_lookup without a code slot cannot be served.
        if (intent == Intent::error_code_lookup) continue;
        double sim = embedding::cosine_similarity(q, set.centroid);
        if (sim > best) {
            best = sim;
            decision.intent = intent;
            best_set = &set;
        }
    }
    if (!best_set) {
        decision.intent = Intent::unknown;
        return decision;
    }
    decision.confidence = std::max(0.0, best);
    std::size_t best_phrase = 0;
    double phrase_sim = -2.0;
    for (std::size_t i = 0; i < best_set->embeddings.size(); ++i) {
        double s = embedding::cosine_similarity(q, best_set->embeddings[i]);
        if (s > phrase_sim) {
            phrase_sim = s;
            best_phrase = i;
        }
    }
    decision.matched_exemplar_id = std::string(intent_name(decision.intent)) + ":" + std::to_string(best_phrase);
    if (decision.confidence < config_.tau_intent) decision.intent = Intent::unknown;
    return decision;
}

}  // namespace bmet::router
