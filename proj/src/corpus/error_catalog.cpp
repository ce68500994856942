#include "bmet/corpus/error_catalog.hpp"

#include <unordered_map>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/corpus/normalize.hpp"

namespace bmet::corpus {

namespace {

std::vector<std::string> split_list(std::string_view field) {
    std::vector<std::string> out;
    for (auto item : split(field, ';')) {
        auto t = trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

std::string chunk_containing(std::span<const Chunk> chunks, std::size_t start, std::size_t end) {
    for (const auto& c : chunks) {
        if (c.span.start <= start && end <= c.span.end) return c.chunk_id;
    }
    // A row longer than the chunk target straddles chunks; cite where it starts.
    for (const auto& c : chunks) {
        if (c.span.start <= start && start < c.span.end) return c.chunk_id;
    }
    return {};
}

}  // namespace

CatalogParseResult parse_error_catalog(const SourceDocument& doc, std::span<const Chunk> chunks) {
    if (doc.doc_class != DocClass::error_catalog)
        throw Error(Errc::InvalidArgument, doc.doc_id + " is not an error catalog");

    CatalogParseResult result;
    std::unordered_map<std::string, std::size_t> seen;
    std::string_view body = doc.body;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < body.size()) {
        std::size_t nl = body.find('\n', pos);
        std::size_t end = nl == std::string_view::npos ? body.size() : nl;
        std::string_view line = body.substr(pos, end - pos);
        const std::size_t line_start = pos;
        pos = end + 1;
        ++line_no;

        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;

        auto fields = split(t, '|');
        if (fields.size() < 2 || fields.size() > 4) {
            result.malformed.push_back({line_no, "expected 2 to 4 '|' separated fields"});
            continue;
        }
        auto raw_code = trim(fields[0]);
        auto description = trim(fields[1]);
        if (raw_code.empty()) {
            result.malformed.push_back({line_no, "missing code"});
            continue;
        }
        if (description.empty()) {
            result.malformed.push_back({line_no, "missing description"});
            continue;
        }

        ErrorCodeEntry entry;
        entry.raw_code = std::string(raw_code);
        try {
            entry.code = normalize_code(raw_code);
        } catch (const Error&) {
            result.malformed.push_back({line_no, "code normalizes to nothing"});
            continue;
        }
        if (auto [it, inserted] = seen.emplace(entry.code, line_no); !inserted) {
            throw Error(Errc::DuplicateCode,
                        entry.code + " (lines " + std::to_string(it->second) + " and " + std::to_string(line_no) + ")");
        }
        entry.description = std::string(description);
        if (fields.size() > 2) entry.causes = split_list(fields[2]);
        if (fields.size() > 3) entry.corrective_actions = split_list(fields[3]);
        entry.source_chunk_id = chunk_containing(chunks, line_start, end);
        result.entries.push_back(std::move(entry));
    }
    return result;
}

CatalogParseResult parse_error_catalog(const SourceDocument& doc, const ChunkingPolicy& policy) {
    auto chunks = chunk_document(doc, policy);
    return parse_error_catalog(doc, chunks);
}

}  // namespace bmet::corpus
