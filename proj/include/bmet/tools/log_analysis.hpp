#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bmet/common/time.hpp"
#include "bmet/tools/error_lookup.hpp"

namespace bmet::tools {

enum class Severity { debug, info, warning, error, fatal };
inline constexpr std::size_t kSeverityCount = 5;

std::string_view severity_name(Severity s) noexcept;
// Case-insensitive; accepts WARN/ERR/CRIT aliases.
std::optional<Severity> parse_severity(std::string_view s) noexcept;

struct LogEntry {
    Timestamp timestamp{};
    Severity severity = Severity::info;
    bool severity_defaulted = false;
    std::optional<std::string> code;
    std::string message;
    std::size_t line_no = 1;
};

struct ParsedLog {
    std::vector<LogEntry> entries;
    std::vector<std::size_t> malformed;
    std::size_t total_lines = 0;
};

// One device's line grammar. parse_line returns nullopt for a malformed line.
class LogFormat {
public:
    virtual ~LogFormat() = default;
    virtual std::string_view name() const noexcept = 0;
    virtual std::optional<LogEntry> parse_line(std::string_view line, std::size_t line_no) const = 0;
};

// `<ISO-8601 timestamp> <SEVERITY> [<code>] <message>`, code optional.
class ReferenceLogFormat final : public LogFormat {
public:
    static constexpr std::string_view kName = "ref-v1";
    std::string_view name() const noexcept override { return kName; }
    std::optional<LogEntry> parse_line(std::string_view line, std::size_t line_no) const override;
};

// Registry of known grammars; "ref-v1" is always present.
void register_log_format(std::shared_ptr<const LogFormat> format);
// Throws Error(UnknownFormatSpec).
std::shared_ptr<const LogFormat> log_format(std::string_view spec);
std::vector<std::string> log_format_names();

// Blank lines count toward total_lines and are reported as malformed.
ParsedLog parse_log(std::string_view text, std::string_view format_spec = ReferenceLogFormat::kName);

struct CodeCount {
    std::string code;
    std::size_t count = 0;
    bool catalog_match = false;
    std::optional<std::string> description;

    bool operator==(const CodeCount&) const = default;
};

struct LogReport {
    std::size_t total_lines = 0;
    std::size_t parsed = 0;
    std::vector<std::size_t> malformed;
    std::array<std::size_t, kSeverityCount> counts_by_severity{};
    std::size_t defaulted_severity = 0;
    std::vector<CodeCount> top_codes;
    std::optional<std::pair<Timestamp, Timestamp>> time_range;
};

// Counts per severity and per code; codes are cross-referenced against the
// catalog and ordered by count descending, then code ascending.
LogReport analyze_log(const ParsedLog& log, const ErrorCatalog* catalog = nullptr);

}  // namespace bmet::tools
