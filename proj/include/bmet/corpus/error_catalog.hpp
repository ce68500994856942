#pragma once

#include <span>
#include <string>
#include <vector>

#include "bmet/corpus/chunker.hpp"
#include "bmet/corpus/document.hpp"

namespace bmet::corpus {

struct ErrorCodeEntry {
    std::string code;
    std::string raw_code;
    std::string description;
    std::vector<std::string> causes;
    std::vector<std::string> corrective_actions;
    std::string source_chunk_id;
};

struct MalformedRow {
    std::size_t line_no = 0;
    std::string reason;
};

struct CatalogParseResult {
    std::vector<ErrorCodeEntry> entries;
    std::vector<MalformedRow> malformed;
};

// Parses `raw_code | description | causes;... | actions;...` rows. Malformed rows
// are collected and skipped; a code that collides after normalization throws
// Error(DuplicateCode).
CatalogParseResult parse_error_catalog(const SourceDocument& doc, std::span<const Chunk> chunks);
CatalogParseResult parse_error_catalog(const SourceDocument& doc, const ChunkingPolicy& policy = {});

}  // namespace bmet::corpus
