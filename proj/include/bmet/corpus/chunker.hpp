#pragma once

#include <span>
#include <string>
#include <vector>

#include "bmet/corpus/document.hpp"

namespace bmet::corpus {

enum class SplitLevel { heading, paragraph, sentence };

// Sizes are in bytes of UTF-8; cut points are snapped to code-point starts.
struct ChunkingPolicy {
    std::size_t target_size = 1200;
    std::size_t overlap = 200;
    std::size_t min_size = 200;
    std::vector<SplitLevel> split_levels{SplitLevel::heading, SplitLevel::paragraph, SplitLevel::sentence};

    // Throws Error(InvalidPolicy) unless 0 <= overlap < target_size and min_size <= target_size.
    void validate() const;
};

struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - start; }
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    DocClass doc_class = DocClass::user_manual;
    std::size_t ordinal = 0;
    std::vector<std::string> heading_path;
    std::string text;
    CharSpan span;
};

std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal);

// Heading lineage of the outline at byte offset `pos`.
std::vector<std::string> heading_path_at(const SourceDocument& doc, std::size_t pos);

// Text that is embedded for retrieval: title and heading lineage, then the chunk.
std::string retrieval_text(const Chunk& chunk, std::string_view doc_title);

// Heading-first recursive splitting. Consecutive chunks of a section overlap by
// `policy.overlap` bytes; sections never share a chunk. Only the last chunk of a
// top-level section may be shorter than min_size, and no chunk exceeds
// 2 * target_size.
std::vector<Chunk> chunk_document(const SourceDocument& doc, const ChunkingPolicy& policy = {});

}  // namespace bmet::corpus
