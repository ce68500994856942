#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bmet/corpus/error_catalog.hpp"
#include "bmet/embedding/embedder.hpp"
#include "bmet/vecstore/segment.hpp"

namespace bmet::tools {

// Normalized code -> entry, for one device model.
class ErrorCatalog {
public:
    ErrorCatalog() = default;
    explicit ErrorCatalog(std::vector<corpus::ErrorCodeEntry> entries);

    // Throws Error(DuplicateCode).
    void add(corpus::ErrorCodeEntry entry);
    bool erase(std::string_view code);
    const corpus::ErrorCodeEntry* find(std::string_view code) const;
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::map<std::string, corpus::ErrorCodeEntry, std::less<>>& entries() const noexcept { return entries_; }
    std::unordered_set<std::string> codes() const;

private:
    std::map<std::string, corpus::ErrorCodeEntry, std::less<>> entries_;
};

enum class LookupTier { exact, disambiguation, related, not_found };

std::string_view lookup_tier_name(LookupTier t) noexcept;

struct ErrorCodeAnswer {
    LookupTier tier = LookupTier::not_found;
    std::string query_code;                        // normalized form of the input
    std::optional<corpus::ErrorCodeEntry> entry;   // exact tier only
    std::vector<std::string> candidates;           // disambiguation tier, sorted
    std::vector<vecstore::SearchHit> related;      // related tier, ranked

    bool definitive() const noexcept { return tier == LookupTier::exact; }
};

struct LookupOptions {
    std::size_t max_edit_distance = 1;
    std::size_t related_k = 5;
};

// Tiered lookup: exact match, then codes within the edit distance bound, then a
// vector search over the error-catalog segment. Throws Error(EmptyCode) and
// Error(NoCatalogLoaded) when catalog is null.
ErrorCodeAnswer lookup_error_code(std::string_view code_raw, const ErrorCatalog* catalog,
                                  const vecstore::StoreSegment* error_segment = nullptr,
                                  const embedding::Embedder* embedder = nullptr, const LookupOptions& opts = {});

}  // namespace bmet::tools
