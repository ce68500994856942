#include "bmet/tools/log_analysis.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/corpus/normalize.hpp"

namespace bmet::tools {

std::string_view severity_name(Severity s) noexcept {
    switch (s) {
        case Severity::debug: return "debug";
        case Severity::info: return "info";
        case Severity::warning: return "warning";
        case Severity::error: return "error";
        case Severity::fatal: return "fatal";
    }
    return "info";
}

std::optional<Severity> parse_severity(std::string_view s) noexcept {
    auto u = to_upper_ascii(s);
    if (u == "DEBUG" || u == "TRACE") return Severity::debug;
    if (u == "INFO" || u == "NOTICE") return Severity::info;
    if (u == "WARNING" || u == "WARN") return Severity::warning;
    if (u == "ERROR" || u == "ERR") return Severity::error;
    if (u == "FATAL" || u == "CRIT" || u == "CRITICAL") return Severity::fatal;
    return std::nullopt;
}

namespace {

std::string_view next_token(std::string_view& rest) {
    std::size_t i = 0;
    while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < rest.size() && rest[j] != ' ' && rest[j] != '\t') ++j;
    auto tok = rest.substr(i, j - i);
    rest.remove_prefix(j);
    return tok;
}

bool all_alpha(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
    });
}

}  // namespace

std::optional<LogEntry> ReferenceLogFormat::parse_line(std::string_view line, std::size_t line_no) const {
    std::string_view rest = line;
    auto ts_tok = next_token(rest);
    if (ts_tok.empty()) return std::nullopt;
    auto ts = parse_iso8601(ts_tok);
    if (!ts) return std::nullopt;

    LogEntry entry;
    entry.timestamp = *ts;
    entry.line_no = line_no;

    std::string_view after_ts = rest;
    auto sev_tok = next_token(rest);
    if (auto sev = parse_severity(sev_tok)) {
        entry.severity = *sev;
    } else {
        entry.severity_defaulted = true;
        // An unrecognized all-letter word occupies the severity slot; anything
        // else (a code, punctuation) belongs to the remainder of the line.
        if (!all_alpha(sev_tok) || sev_tok.empty()) rest = after_ts;
    }

    auto body = trim(rest);
    if (!body.empty() && body.front() == '[') {
        auto close = body.find(']');
        if (close != std::string_view::npos) {
            try {
                entry.code = corpus::normalize_code(body.substr(1, close - 1));
            } catch (const Error&) {
            }
            body = trim(body.substr(close + 1));
        }
    }
    entry.message = std::string(body);
    return entry;
}

namespace {

struct Registry {
    std::mutex mu;
    std::map<std::string, std::shared_ptr<const LogFormat>, std::less<>> formats;

    Registry() { formats.emplace(std::string(ReferenceLogFormat::kName), std::make_shared<ReferenceLogFormat>()); }
};

Registry& registry() {
    static Registry r;
    return r;
}

}  // namespace

void register_log_format(std::shared_ptr<const LogFormat> format) {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    r.formats[std::string(format->name())] = std::move(format);
}

std::shared_ptr<const LogFormat> log_format(std::string_view spec) {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    auto it = r.formats.find(spec);
    if (it == r.formats.end()) throw Error(Errc::UnknownFormatSpec, "unknown log format " + std::string(spec));
    return it->second;
}

std::vector<std::string> log_format_names() {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    std::vector<std::string> out;
    for (const auto& [name, _] : r.formats) out.push_back(name);
    return out;
}

ParsedLog parse_log(std::string_view text, std::string_view format_spec) {
    auto format = log_format(format_spec);
    ParsedLog out;
    // A trailing newline does not open another line.
    if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
    if (text.empty()) return out;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        auto entry = trim(line).empty() ? std::nullopt : format->parse_line(line, line_no);
        if (entry) {
            out.entries.push_back(std::move(*entry));
        } else {
            out.malformed.push_back(line_no);
        }
    }
    out.total_lines = line_no;
    return out;
}

LogReport analyze_log(const ParsedLog& log, const ErrorCatalog* catalog) {
    LogReport report;
    report.total_lines = log.total_lines;
    report.parsed = log.entries.size();
    report.malformed = log.malformed;

    std::map<std::string, std::size_t> counts;
    for (const auto& e : log.entries) {
        ++report.counts_by_severity[static_cast<std::size_t>(e.severity)];
        if (e.severity_defaulted) ++report.defaulted_severity;
        if (e.code) ++counts[*e.code];
        if (!report.time_range) {
            report.time_range.emplace(e.timestamp, e.timestamp);
        } else {
            report.time_range->first = std::min(report.time_range->first, e.timestamp);
            report.time_range->second = std::max(report.time_range->second, e.timestamp);
        }
    }

    for (const auto& [code, n] : counts) {
        CodeCount c{code, n, false, std::nullopt};
        if (catalog) {
            if (const auto* entry = catalog->find(code)) {
                c.catalog_match = true;
                c.description = entry->description;
            }
        }
        report.top_codes.push_back(std::move(c));
    }
    std::stable_sort(report.top_codes.begin(), report.top_codes.end(),
                     [](const CodeCount& a, const CodeCount& b) { return a.count > b.count; });
    return report;
}

}  // namespace bmet::tools
