#include "bmet/tools/error_lookup.hpp"

#include <algorithm>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/corpus/normalize.hpp"

namespace bmet::tools {

ErrorCatalog::ErrorCatalog(std::vector<corpus::ErrorCodeEntry> entries) {
    for (auto& e : entries) add(std::move(e));
}

void ErrorCatalog::add(corpus::ErrorCodeEntry entry) {
    auto code = entry.code;
    auto [it, inserted] = entries_.emplace(code, std::move(entry));
    if (!inserted) throw Error(Errc::DuplicateCode, "duplicate error code " + code);
}

bool ErrorCatalog::erase(std::string_view code) {
    auto it = entries_.find(code);
    if (it == entries_.end()) return false;
    entries_.erase(it);
    return true;
}

const corpus::ErrorCodeEntry* ErrorCatalog::find(std::string_view code) const {
    auto it = entries_.find(code);
    return it == entries_.end() ? nullptr : &it->second;
}

std::unordered_set<std::string> ErrorCatalog::codes() const {
    std::unordered_set<std::string> out;
    for (const auto& [code, _] : entries_) out.insert(code);
    return out;
}

std::string_view lookup_tier_name(LookupTier t) noexcept {
    switch (t) {
        case LookupTier::exact: return "exact";
        case LookupTier::disambiguation: return "disambiguation";
        case LookupTier::related: return "related";
        case LookupTier::not_found: return "not_found";
    }
    return "not_found";
}

ErrorCodeAnswer lookup_error_code(std::string_view code_raw, const ErrorCatalog* catalog,
                                  const vecstore::StoreSegment* error_segment, const embedding::Embedder* embedder,
                                  const LookupOptions& opts) {
    ErrorCodeAnswer answer;
    answer.query_code = corpus::normalize_code(code_raw);
    if (!catalog) throw Error(Errc::NoCatalogLoaded, "no error catalog loaded");

    if (const auto* e = catalog->find(answer.query_code)) {
        answer.tier = LookupTier::exact;
        answer.entry = *e;
        return answer;
    }

    for (const auto& [code, _] : catalog->entries()) {
        std::size_t lower = code.size() > answer.query_code.size() ? code.size() - answer.query_code.size()
                                                                   : answer.query_code.size() - code.size();
        if (lower > opts.max_edit_distance) continue;
        if (edit_distance(code, answer.query_code) <= opts.max_edit_distance) answer.candidates.push_back(code);
    }
    if (!answer.candidates.empty()) {
        answer.tier = LookupTier::disambiguation;
        return answer;
    }

    if (error_segment && embedder && error_segment->size() > 0) {
        auto q = embedder->embed(code_raw);
        if (!q.is_zero) answer.related = error_segment->search(q.values, opts.related_k);
    }
    answer.tier = answer.related.empty() ? LookupTier::not_found : LookupTier::related;
    return answer;
}

}  // namespace bmet::tools
