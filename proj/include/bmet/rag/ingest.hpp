#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bmet/corpus/chunker.hpp"
#include "bmet/corpus/manifest.hpp"
#include "bmet/embedding/embedder.hpp"
#include "bmet/rag/knowledge_base.hpp"

namespace bmet::rag {

struct DocumentReport {
    std::string path;
    std::string doc_id;
    std::string doc_class;
    std::size_t chunks = 0;
    std::optional<std::string> error;  // "<code>: <message>" when the file was skipped
};

struct IngestReport {
    std::size_t documents = 0;  // successfully ingested
    std::size_t chunks = 0;
    std::size_t catalog_entries = 0;
    std::size_t malformed_rows = 0;
    std::map<std::string, std::size_t> segment_counts;  // "<device_class>/<segment>" -> live entries
    std::vector<DocumentReport> files;

    std::size_t failed() const;
};

struct IngestOptions {
    corpus::ChunkingPolicy policy;
    IndexSettings index;
};

// Builds every segment from manifest records, in manifest order so that
// identical inputs give identical graphs. Unreadable or invalid files are
// recorded and skipped; a duplicate error code aborts with Error(DuplicateCode).
std::unique_ptr<KnowledgeBase> build_knowledge_base(const std::vector<corpus::ManifestRecord>& records,
                                                    const embedding::Embedder& embedder, const IngestOptions& options,
                                                    IngestReport& report);

}  // namespace bmet::rag
