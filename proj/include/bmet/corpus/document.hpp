#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmet/common/time.hpp"

namespace bmet::corpus {

enum class DocClass { user_manual, service_manual, error_catalog, community };

std::string_view doc_class_name(DocClass c) noexcept;
std::optional<DocClass> parse_doc_class(std::string_view s) noexcept;

// One entry of the document outline. Offsets index into SourceDocument::body.
struct Heading {
    int level = 1;
    std::string title;
    std::size_t line_start = 0;
    std::size_t content_start = 0;
};

struct DocumentMeta {
    std::string device_model;
    DocClass doc_class = DocClass::user_manual;
    std::string language = "en";
    std::string title;
};

struct SourceDocument {
    std::string doc_id;
    std::string device_model;
    DocClass doc_class = DocClass::user_manual;
    std::string language;
    std::string title;
    std::string body;
    Timestamp ingested_at{};
    std::vector<Heading> outline;

    // Smallest heading level present, or 0 when the document has no headings.
    int top_level() const noexcept;
};

// Simplified BCP 47 shape check: a 2-3 letter primary subtag followed by
// alphanumeric subtags of 1-8 characters.
bool is_valid_language_tag(std::string_view tag) noexcept;

// Stable, readable id: "<model>-<class>-<title>" slugged.
std::string make_doc_id(const DocumentMeta& meta);

// Recognizes ATX headings (leading '#' runs) and setext underlines ('===' / '---').
// Error catalogs carry no outline: their '#' lines are comments.
std::vector<Heading> extract_outline(std::string_view body);

// Throws Error(EmptyDocument) on whitespace-only input and
// Error(InvalidLanguageTag) on a malformed tag. CRLF is folded to LF.
SourceDocument parse_document(std::string_view raw, const DocumentMeta& meta, Timestamp ingested_at = now_utc());

}  // namespace bmet::corpus
