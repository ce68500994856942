#include "bmet/corpus/document.hpp"

#include <algorithm>
#include <cctype>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::corpus {

std::string_view doc_class_name(DocClass c) noexcept {
    switch (c) {
        case DocClass::user_manual: return "user_manual";
        case DocClass::service_manual: return "service_manual";
        case DocClass::error_catalog: return "error_catalog";
        case DocClass::community: return "community";
    }
    return "user_manual";
}

std::optional<DocClass> parse_doc_class(std::string_view s) noexcept {
    if (s == "user_manual") return DocClass::user_manual;
    if (s == "service_manual") return DocClass::service_manual;
    if (s == "error_catalog") return DocClass::error_catalog;
    if (s == "community") return DocClass::community;
    return std::nullopt;
}

int SourceDocument::top_level() const noexcept {
    int best = 0;
    for (const auto& h : outline) {
        if (best == 0 || h.level < best) best = h.level;
    }
    return best;
}

bool is_valid_language_tag(std::string_view tag) noexcept {
    auto parts = split(tag, '-');
    if (parts.empty()) return false;
    const auto& primary = parts.front();
    if (primary.size() < 2 || primary.size() > 3) return false;
    if (!std::all_of(primary.begin(), primary.end(), [](unsigned char c) { return std::isalpha(c); }))
        return false;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& p = parts[i];
        if (p.empty() || p.size() > 8) return false;
        if (!std::all_of(p.begin(), p.end(), [](unsigned char c) { return std::isalnum(c); })) return false;
    }
    return true;
}

std::string make_doc_id(const DocumentMeta& meta) {
    return slugify(meta.device_model) + "-" + slugify(doc_class_name(meta.doc_class)) + "-" + slugify(meta.title);
}

namespace {

struct Line {
    std::size_t start;
    std::size_t end;  // exclusive, excludes '\n'
    std::string_view text;
};

std::vector<Line> index_lines(std::string_view body) {
    std::vector<Line> lines;
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t nl = body.find('\n', pos);
        std::size_t end = nl == std::string_view::npos ? body.size() : nl;
        lines.push_back({pos, end, body.substr(pos, end - pos)});
        pos = end + 1;
    }
    return lines;
}

bool is_fence(std::string_view line) {
    auto t = trim(line);
    return t.starts_with("```") || t.starts_with("~~~");
}

std::optional<std::pair<int, std::string>> atx_heading(std::string_view line) {
    std::size_t n = 0;
    while (n < line.size() && line[n] == '#') ++n;
    if (n == 0 || n > 6) return std::nullopt;
    if (n < line.size() && line[n] != ' ' && line[n] != '\t') return std::nullopt;
    auto title = trim(line.substr(n));
    while (!title.empty() && title.back() == '#') title.remove_suffix(1);
    title = trim(title);
    if (title.empty()) return std::nullopt;
    return std::make_pair(static_cast<int>(n), std::string(title));
}

int setext_level(std::string_view line) {
    auto t = trim(line);
    if (t.size() < 3) return 0;
    if (std::all_of(t.begin(), t.end(), [](char c) { return c == '='; })) return 1;
    if (std::all_of(t.begin(), t.end(), [](char c) { return c == '-'; })) return 2;
    return 0;
}

}  // namespace

std::vector<Heading> extract_outline(std::string_view body) {
    std::vector<Heading> outline;
    auto lines = index_lines(body);
    bool in_fence = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (is_fence(line.text)) {
            in_fence = !in_fence;
            continue;
        }
        if (in_fence) continue;
        if (auto atx = atx_heading(line.text)) {
            std::size_t content = std::min(line.end + 1, body.size());
            outline.push_back({atx->first, atx->second, line.start, content});
            continue;
        }
        auto t = trim(line.text);
        if (t.empty() || i + 1 >= lines.size()) continue;
        int level = setext_level(lines[i + 1].text);
        if (level == 0) continue;
        // A setext heading is a single paragraph line: the line above must be blank.
        if (i > 0 && !trim(lines[i - 1].text).empty()) continue;
        std::size_t content = std::min(lines[i + 1].end + 1, body.size());
        outline.push_back({level, std::string(t), line.start, content});
        ++i;
    }
    return outline;
}

SourceDocument parse_document(std::string_view raw, const DocumentMeta& meta, Timestamp ingested_at) {
    if (trim(raw).empty()) throw Error(Errc::EmptyDocument, meta.title);
    if (!is_valid_language_tag(meta.language)) throw Error(Errc::InvalidLanguageTag, meta.language);

    SourceDocument doc;
    doc.body.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n') continue;
        doc.body.push_back(raw[i]);
    }
    doc.doc_id = make_doc_id(meta);
    doc.device_model = meta.device_model;
    doc.doc_class = meta.doc_class;
    doc.language = meta.language;
    doc.title = meta.title;
    doc.ingested_at = ingested_at;
    if (meta.doc_class != DocClass::error_catalog) doc.outline = extract_outline(doc.body);
    return doc;
}

}  // namespace bmet::corpus
