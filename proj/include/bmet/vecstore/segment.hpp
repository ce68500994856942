#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bmet/embedding/embedder.hpp"
#include "bmet/vecstore/hnsw.hpp"

namespace bmet::vecstore {

enum class IndexKind { flat, hnsw };

std::string_view index_kind_name(IndexKind k) noexcept;
std::optional<IndexKind> parse_index_kind(std::string_view s) noexcept;

struct SearchHit {
    std::string chunk_id;
    double score = 0.0;
    std::string segment_name;

    bool operator==(const SearchHit&) const = default;
};

// Ranking order for hits: score descending, then chunk_id ascending.
bool hit_before(const SearchHit& a, const SearchHit& b) noexcept;

inline constexpr std::uint32_t kSegmentFormatVersion = 1;

// A named, device-class scoped vector index. Entries are append-only; removal
// tombstones the entry until rebuild(). Readers share a lock, writers are
// exclusive, so a search sees the segment either before or after an insert.
class StoreSegment {
public:
    StoreSegment(std::string name, std::string device_class, embedding::EmbedderSpec spec,
                 IndexKind kind = IndexKind::hnsw, HnswParams params = {});
    StoreSegment(StoreSegment&&) noexcept;
    StoreSegment& operator=(StoreSegment&&) noexcept;
    ~StoreSegment();

    const std::string& name() const noexcept { return name_; }
    const std::string& device_class() const noexcept { return device_class_; }
    const embedding::EmbedderSpec& embedder_spec() const noexcept { return spec_; }
    IndexKind index_kind() const noexcept { return kind_; }
    const HnswParams& hnsw_params() const noexcept { return graph_.params(); }

    // Live (non-tombstoned) entries.
    std::size_t size() const;
    // Nodes in the HNSW graph, tombstones included.
    std::size_t node_count() const;
    bool contains(std::string_view chunk_id) const;
    std::optional<std::string> payload_ref(std::string_view chunk_id) const;
    std::vector<std::string> chunk_ids() const;

    // Throws Error(DimensionMismatch) or Error(DuplicateId).
    void insert(const std::string& chunk_id, std::span<const float> vector, std::string payload_ref);
    bool remove(std::string_view chunk_id);
    // Drops tombstoned entries and rebuilds the graph in insertion order.
    void rebuild();

    // Searches with the segment's own index kind. Throws Error(EmptySegment).
    std::vector<SearchHit> search(std::span<const float> query, std::size_t k) const;
    std::vector<SearchHit> search_flat(std::span<const float> query, std::size_t k) const;
    // ef defaults to max(ef_search, k).
    std::vector<SearchHit> search_hnsw(std::span<const float> query, std::size_t k,
                                       std::optional<std::size_t> ef = std::nullopt) const;

    std::string serialize() const;
    static StoreSegment deserialize(std::string_view bytes);
    void persist(const std::filesystem::path& path) const;
    static StoreSegment load(const std::filesystem::path& path);
    // Also throws Error(EmbedderSpecMismatch) when the file was built with another spec.
    static StoreSegment load(const std::filesystem::path& path, const embedding::EmbedderSpec& expected);

private:
    std::span<const float> row(std::uint32_t i) const {
        return {vectors_.data() + static_cast<std::size_t>(i) * spec_.dimension, spec_.dimension};
    }
    void check_query(std::span<const float> query) const;
    std::vector<SearchHit> flat_locked(std::span<const float> query, std::size_t k) const;
    std::vector<SearchHit> hnsw_locked(std::span<const float> query, std::size_t k, std::size_t ef) const;

    std::string name_;
    std::string device_class_;
    embedding::EmbedderSpec spec_;
    IndexKind kind_;

    std::vector<std::string> ids_;
    std::vector<std::string> payloads_;
    std::vector<char> tombstone_;
    std::vector<float> vectors_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
    std::size_t live_ = 0;
    HnswGraph graph_;

    std::unique_ptr<std::shared_mutex> mu_;
};

// Global top-k over several segments sharing one embedder spec. Empty segments
// contribute nothing. Throws Error(MixedEmbedderSpec).
std::vector<SearchHit> search_multi(std::span<const StoreSegment* const> segments, std::span<const float> query,
                                    std::size_t k);

}  // namespace bmet::vecstore
