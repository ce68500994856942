#include "bmet/corpus/chunker.hpp"

#include <algorithm>
#include <cstdio>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::corpus {

void ChunkingPolicy::validate() const {
    if (target_size == 0 || overlap >= target_size)
        throw Error(Errc::InvalidPolicy, "overlap must be smaller than target_size");
    if (min_size > target_size) throw Error(Errc::InvalidPolicy, "min_size must not exceed target_size");
}

std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", ordinal);
    return std::string(doc_id) + "#" + buf;
}

std::vector<std::string> heading_path_at(const SourceDocument& doc, std::size_t pos) {
    std::vector<const Heading*> stack;
    for (const auto& h : doc.outline) {
        if (h.line_start > pos) break;
        while (!stack.empty() && stack.back()->level >= h.level) stack.pop_back();
        stack.push_back(&h);
    }
    std::vector<std::string> path;
    path.reserve(stack.size());
    for (const auto* h : stack) path.push_back(h->title);
    return path;
}

std::string retrieval_text(const Chunk& chunk, std::string_view doc_title) {
    std::string out(doc_title);
    for (const auto& h : chunk.heading_path) {
        out += " > ";
        out += h;
    }
    out += "\n";
    out += chunk.text;
    return out;
}

namespace {

// Boundary strength of cutting the body just before offset p.
enum Strength : int { kChar = 0, kWord = 1, kSentence = 2, kLine = 3, kParagraph = 4, kHeading = 5 };

class BoundaryScorer {
public:
    BoundaryScorer(const SourceDocument& doc, const ChunkingPolicy& policy) : body_(doc.body) {
        for (auto level : policy.split_levels) {
            if (level == SplitLevel::heading) use_heading_ = true;
            if (level == SplitLevel::paragraph) use_paragraph_ = true;
            if (level == SplitLevel::sentence) use_sentence_ = true;
        }
        if (use_heading_) {
            for (const auto& h : doc.outline) heading_starts_.push_back(h.line_start);
        }
    }

    int strength(std::size_t p) const {
        const char prev = body_[p - 1];
        if (use_heading_ && std::binary_search(heading_starts_.begin(), heading_starts_.end(), p)) return kHeading;
        if (prev == '\n') {
            if (use_paragraph_ && p >= 2 && body_[p - 2] == '\n') return kParagraph;
            return kLine;
        }
        if (prev == ' ' || prev == '\t') {
            if (use_sentence_ && p >= 2) {
                char c = body_[p - 2];
                if (c == '.' || c == '!' || c == '?' || c == ':' || c == ';') return kSentence;
            }
            return kWord;
        }
        return kChar;
    }

    // Strongest cut in [lo, hi]; the furthest one wins among equals.
    std::size_t best_cut(std::size_t lo, std::size_t hi) const {
        std::size_t best = utf8_floor(body_, hi);
        if (best < lo) best = hi;
        int best_strength = -1;
        for (std::size_t p = hi; p >= lo && p > 0; --p) {
            if (p < body_.size() && (static_cast<unsigned char>(body_[p]) >> 6) == 0x2) continue;
            int s = strength(p);
            if (s > best_strength) {
                best_strength = s;
                best = p;
                if (s == kHeading) break;
            }
        }
        return best;
    }

private:
    std::string_view body_;
    std::vector<std::size_t> heading_starts_;
    bool use_heading_ = false;
    bool use_paragraph_ = false;
    bool use_sentence_ = false;
};

std::vector<CharSpan> top_level_sections(const SourceDocument& doc) {
    std::vector<CharSpan> sections;
    const int top = doc.top_level();
    std::size_t start = 0;
    for (const auto& h : doc.outline) {
        if (h.level != top || h.line_start == 0) continue;
        sections.push_back({start, h.line_start});
        start = h.line_start;
    }
    sections.push_back({start, doc.body.size()});
    return sections;
}

}  // namespace

std::vector<Chunk> chunk_document(const SourceDocument& doc, const ChunkingPolicy& policy) {
    policy.validate();
    const BoundaryScorer scorer(doc, policy);
    std::vector<Chunk> chunks;

    auto emit = [&](CharSpan span, std::size_t lineage_pos) {
        Chunk c;
        c.ordinal = chunks.size();
        c.chunk_id = make_chunk_id(doc.doc_id, c.ordinal);
        c.doc_id = doc.doc_id;
        c.doc_class = doc.doc_class;
        c.heading_path = heading_path_at(doc, lineage_pos);
        c.text = doc.body.substr(span.start, span.size());
        c.span = span;
        chunks.push_back(std::move(c));
    };

    for (const auto& section : top_level_sections(doc)) {
        if (section.size() == 0) continue;
        std::size_t start = section.start;
        std::size_t fresh = section.start;  // first byte not shared with the previous chunk
        while (true) {
            if (section.end - start <= policy.target_size) {
                emit({start, section.end}, fresh);
                break;
            }
            std::size_t lo = std::max(start + policy.min_size, fresh + 1);
            std::size_t hi = start + policy.target_size;
            std::size_t end = scorer.best_cut(lo, hi);
            if (section.end - end < policy.min_size) end = section.end;
            emit({start, end}, fresh);
            if (end == section.end) break;
            std::size_t next = end > policy.overlap ? end - policy.overlap : 0;
            next = utf8_floor(doc.body, next);
            start = std::max(next, start + 1);
            fresh = end;
        }
    }
    return chunks;
}

}  // namespace bmet::corpus
