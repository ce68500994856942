#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bmet/corpus/document.hpp"
#include "bmet/embedding/embedder.hpp"
#include "bmet/tools/error_lookup.hpp"
#include "bmet/vecstore/segment.hpp"

namespace bmet::rag {

inline constexpr std::array kSegmentClasses{corpus::DocClass::user_manual, corpus::DocClass::service_manual,
                                            corpus::DocClass::error_catalog, corpus::DocClass::community};

struct ChunkRecord {
    std::string chunk_id;
    std::string doc_id;
    std::string doc_title;
    std::string device_model;
    corpus::DocClass doc_class = corpus::DocClass::user_manual;
    std::vector<std::string> heading_path;
    std::string text;

    bool operator==(const ChunkRecord&) const = default;
};

struct SegmentStatus {
    std::string device_class;
    std::string name;
    std::size_t size = 0;
};

struct IndexSettings {
    vecstore::IndexKind kind = vecstore::IndexKind::hnsw;
    vecstore::HnswParams hnsw;
};

inline constexpr std::uint32_t kKnowledgeBaseFormat = 1;

// Segments per device class (one per doc class), the chunk table the segments
// point into, and per-model error catalogs. Segment and chunk writes are
// serialized; readers run concurrently.
class KnowledgeBase {
public:
    KnowledgeBase(embedding::EmbedderSpec spec, IndexSettings index = {});

    const embedding::EmbedderSpec& embedder_spec() const noexcept { return spec_; }
    const IndexSettings& index_settings() const noexcept { return index_; }

    // Creates the four segments of the class on first sight.
    void register_device(const std::string& device_model, const std::string& device_class);
    std::optional<std::string> device_class_of(std::string_view device_model) const;
    std::vector<std::string> device_models() const;
    std::vector<std::string> device_classes() const;

    vecstore::StoreSegment* segment(std::string_view device_class, corpus::DocClass cls);
    const vecstore::StoreSegment* segment(std::string_view device_class, corpus::DocClass cls) const;
    std::vector<SegmentStatus> status() const;

    // Inserts into the segment of the record's device and the chunk table.
    // Throws Error(DuplicateId), Error(DimensionMismatch), or Error(InvalidArgument)
    // for an unregistered device.
    void add_chunk(ChunkRecord record, std::span<const float> vector);
    std::optional<ChunkRecord> chunk(std::string_view chunk_id) const;
    std::size_t chunk_count() const;
    std::vector<std::string> chunk_ids() const;

    // Catalog of one model, or nullptr.
    std::shared_ptr<const tools::ErrorCatalog> catalog(std::string_view device_model) const;
    void set_catalog(const std::string& device_model, tools::ErrorCatalog catalog);
    // Drops one code from a model's catalog; returns whether it existed.
    bool remove_catalog_code(std::string_view device_model, std::string_view code);

    // Directory layout: kb.json, chunks.jsonl, catalogs.jsonl and
    // segments/<device_class>/<segment>.seg. Every file is written atomically.
    void persist(const std::filesystem::path& dir) const;
    // Rewrites one segment file plus the chunk table (used after promotion).
    void persist_segment(const std::filesystem::path& dir, std::string_view device_class, corpus::DocClass cls) const;
    // Throws Error(MissingStores) when dir holds no knowledge base and
    // Error(EmbedderSpecMismatch) when `expected` disagrees with the files.
    static std::unique_ptr<KnowledgeBase> load(const std::filesystem::path& dir,
                                               const std::optional<embedding::EmbedderSpec>& expected = std::nullopt);
    static bool exists(const std::filesystem::path& dir);

private:
    void write_chunks(const std::filesystem::path& dir) const;
    using SegmentSet = std::array<std::unique_ptr<vecstore::StoreSegment>, kSegmentClasses.size()>;

    embedding::EmbedderSpec spec_;
    IndexSettings index_;

    mutable std::shared_mutex mu_;
    std::map<std::string, std::string, std::less<>> devices_;        // model -> class
    std::map<std::string, SegmentSet, std::less<>> segments_;         // class -> segments
    std::unordered_map<std::string, ChunkRecord> chunks_;
    std::map<std::string, std::shared_ptr<const tools::ErrorCatalog>, std::less<>> catalogs_;
};

std::filesystem::path segment_path(const std::filesystem::path& dir, std::string_view device_class,
                                   corpus::DocClass cls);

}  // namespace bmet::rag
