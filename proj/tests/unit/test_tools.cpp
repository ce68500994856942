#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/rag/knowledge_base.hpp"
#include "bmet/tools/error_lookup.hpp"
#include "bmet/tools/log_analysis.hpp"
#include "bmet/tools/maintenance.hpp"
#include "bmet/tools/self_test.hpp"
#include "support.hpp"

using namespace bmet;
using namespace bmet::tools;
using namespace std::chrono;

namespace {

corpus::ErrorCodeEntry entry(std::string code, std::string desc) {
    corpus::ErrorCodeEntry e;
    e.code = e.raw_code = std::move(code);
    e.description = std::move(desc);
    return e;
}

// code -> description straight from the catalog text, without the corpus parser.
std::map<std::string, std::string> catalog_file_oracle() {
    std::map<std::string, std::string> out;
    std::istringstream in(read_file(testing::data_dir() / "desk" / "docs" / "ec_catalog.txt"));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto bar = line.find(" | ");
        auto bar2 = line.find(" | ", bar + 3);
        std::string code = line.substr(0, bar);
        for (auto& c : code)
            if (c == '_' || c == '.') c = '-';
        out[code] = line.substr(bar + 3, bar2 - bar - 3);
    }
    return out;
}

}  // namespace

TEST_CASE("every desk code looks up its own description") {
    auto& f = testing::desk_fixture();
    auto cat = f.desk->knowledge_base()->catalog("SV-5000");
    REQUIRE(cat);
    auto oracle = catalog_file_oracle();
    REQUIRE(oracle.size() == 90);
    std::size_t correct = 0;
    for (const auto& [code, desc] : oracle) {
        auto a = lookup_error_code(code, cat.get());
        if (a.tier == LookupTier::exact && a.entry && a.entry->description == desc) ++correct;
    }
    CHECK(correct == 90);
}

TEST_CASE("raw spellings normalize to the exact tier") {
    ErrorCatalog cat({entry("E-042", "probe fault")});
    for (const char* raw : {"E-042", "e-042", "E_042", "E.042", " e 042 "}) {
        auto a = lookup_error_code(raw, &cat);
        CHECK(a.tier == LookupTier::exact);
        CHECK(a.definitive());
    }
}

TEST_CASE("near miss gives a disambiguation list, never an answer") {
    ErrorCatalog cat({entry("E-042", "probe fault"), entry("E-043", "probe id"), entry("E-142", "fan")});
    auto a = lookup_error_code("E-O42", &cat);
    CHECK(a.tier == LookupTier::disambiguation);
    CHECK_FALSE(a.definitive());
    CHECK_FALSE(a.entry);
    CHECK(std::find(a.candidates.begin(), a.candidates.end(), "E-042") != a.candidates.end());
    CHECK(std::is_sorted(a.candidates.begin(), a.candidates.end()));
    for (const auto& c : a.candidates) CHECK(edit_distance(c, "E-O42") <= 1);
}

TEST_CASE("unknown code with an empty segment is not found") {
    ErrorCatalog cat({entry("E-042", "probe fault")});
    auto emb = embedding::make_embedder({});
    vecstore::StoreSegment seg("ec", "ultrasound", emb->spec());
    auto a = lookup_error_code("ZZ-999", &cat, &seg, emb.get());
    CHECK(a.tier == LookupTier::not_found);
    CHECK(a.related.empty());
    CHECK(a.candidates.empty());
}

TEST_CASE("unknown code falls to related catalog text") {
    auto& f = testing::desk_fixture();
    auto* kb = f.desk->knowledge_base();
    auto a = lookup_error_code("ZZ-999", kb->catalog("SV-5000").get(),
                               kb->segment("ultrasound", corpus::DocClass::error_catalog), &f.desk->embedder());
    CHECK(a.tier == LookupTier::related);
    CHECK_FALSE(a.definitive());
    CHECK(a.related.size() <= 5);
}

TEST_CASE("lookup errors") {
    ErrorCatalog cat;
    CHECK_THROWS_WITH_AS(lookup_error_code("E-1", nullptr), doctest::Contains("NoCatalogLoaded"), Error);
    CHECK_THROWS_WITH_AS(lookup_error_code(" - ", &cat), doctest::Contains("EmptyCode"), Error);
    cat.add(entry("A-1", "x"));
    CHECK_THROWS_WITH_AS(cat.add(entry("A-1", "y")), doctest::Contains("DuplicateCode"), Error);
}

TEST_CASE("three well-formed lines") {
    auto log = parse_log(
        "2024-03-01T10:00:00Z INFO boot complete\n"
        "2024-03-01T10:00:05Z WARNING [E-042] probe warm\n"
        "2024-03-01T10:01:00+02:00 ERROR [PWR-101] rail low\n");
    CHECK(log.entries.size() == 3);
    CHECK(log.malformed.empty());
    CHECK(log.entries[1].code == std::optional<std::string>("E-042"));
    CHECK(log.entries[1].severity == Severity::warning);
    CHECK(format_iso8601(log.entries[2].timestamp) == "2024-03-01T08:01:00Z");
}

TEST_CASE("line without timestamp is malformed") {
    auto log = parse_log("2024-03-01T10:00:00Z INFO ok\nINFO no time here\n2024-03-01T10:00:01Z INFO ok\n");
    CHECK(log.entries.size() == 2);
    REQUIRE(log.malformed.size() == 1);
    CHECK(log.malformed[0] == 2);
    CHECK_THROWS_WITH_AS(parse_log("x", "nope-v9"), doctest::Contains("UnknownFormatSpec"), Error);
}

TEST_CASE("empty log gives a zeroed report") {
    auto r = analyze_log(parse_log(""));
    CHECK(r.parsed == 0);
    CHECK(r.top_codes.empty());
    CHECK_FALSE(r.time_range);
    for (auto c : r.counts_by_severity) CHECK(c == 0);
}

TEST_CASE("code counting order") {
    auto log = parse_log(
        "2024-03-01T10:00:00Z ERROR [E-2] b\n"
        "2024-03-01T10:00:01Z ERROR [E-1] a\n"
        "2024-03-01T10:00:02Z ERROR [E-1] a\n"
        "2024-03-01T10:00:03Z ERROR [E-1] a\n");
    auto r = analyze_log(log);
    REQUIRE(r.top_codes.size() == 2);
    CHECK(r.top_codes[0].code == "E-1");
    CHECK(r.top_codes[0].count == 3);
    CHECK(r.top_codes[1].code == "E-2");
    CHECK(r.top_codes[1].count == 1);
}

TEST_CASE("generated 10000-line log matches the planted tallies") {
    std::mt19937_64 rng(1234);
    const std::vector<std::string> codes{"PWR-101", "PWR-102", "TRX-301", "SYS-901", "ZZ-001"};
    const std::vector<std::string> sevs{"DEBUG", "INFO", "WARNING", "ERROR", "FATAL"};
    std::map<std::string, std::size_t> planted_codes;
    std::array<std::size_t, 5> planted_sev{};
    std::size_t planted_bad = 0;
    std::string text;
    auto t0 = sys_days{2024y / 1 / 1};
    for (int i = 0; i < 10000; ++i) {
        if (rng() % 20 == 0) {
            text += "garbage line " + std::to_string(i) + "\n";
            ++planted_bad;
            continue;
        }
        auto sev = rng() % 5;
        ++planted_sev[sev];
        std::string line = format_iso8601(time_point_cast<milliseconds>(t0 + seconds(i))) + " " + sevs[sev] + " ";
        if (rng() % 3 != 0) {
            const auto& c = codes[rng() % codes.size()];
            ++planted_codes[c];
            line += "[" + c + "] ";
        }
        text += line + "event " + std::to_string(i) + "\n";
    }
    ErrorCatalog cat({entry("PWR-101", "rail"), entry("TRX-301", "transmit")});
    auto log = parse_log(text);
    CHECK(log.entries.size() + log.malformed.size() == 10000);
    CHECK(log.malformed.size() == planted_bad);
    auto r = analyze_log(log, &cat);
    for (std::size_t s = 0; s < 5; ++s) CHECK(r.counts_by_severity[s] == planted_sev[s]);
    REQUIRE(r.top_codes.size() == planted_codes.size());
    for (std::size_t i = 0; i < r.top_codes.size(); ++i) {
        const auto& tc = r.top_codes[i];
        CHECK(tc.count == planted_codes.at(tc.code));
        CHECK(tc.catalog_match == (tc.code == "PWR-101" || tc.code == "TRX-301"));
        if (i > 0) {
            const auto& prev = r.top_codes[i - 1];
            CHECK((prev.count > tc.count || (prev.count == tc.count && prev.code < tc.code)));
        }
    }
    REQUIRE(r.time_range);
    CHECK(r.time_range->first >= time_point_cast<milliseconds>(t0));
}

TEST_CASE("self-test with no steps is complete at once") {
    SelfTestLibrary lib;
    lib.add(parse_selftest_script("# nothing\n", "EMPTY-1"));
    auto s = start_self_test(lib, "EMPTY-1");
    CHECK(s.complete());
    CHECK(s.current_step() == nullptr);
    CHECK_THROWS_WITH_AS(s.advance(StepResult::pass), doctest::Contains("SessionComplete"), Error);
}

TEST_CASE("pass fail pass") {
    SelfTestLibrary lib;
    lib.add(parse_selftest_script("a | check display | lit\nb | press keys | beep\nc | fans | spin\n", "M-1"));
    auto s = start_self_test(lib, "M-1");
    CHECK(std::get<SelfTestStep>(s.advance(StepResult::pass)).step_id == "b");
    CHECK(std::get<SelfTestStep>(s.advance(StepResult::fail)).step_id == "c");
    auto rep = std::get<SelfTestReport>(s.advance(StepResult::pass));
    CHECK(rep.passed == 2);
    CHECK(rep.failed == 1);
    CHECK(rep.skipped == 0);
    REQUIRE(rep.trace.size() == 3);
    CHECK(rep.trace[1].result == StepResult::fail);
    CHECK(rep.trace[2].index == 3);
    CHECK_THROWS_WITH_AS(s.advance(StepResult::pass), doctest::Contains("SessionComplete"), Error);
    CHECK_THROWS_WITH_AS(start_self_test(lib, "M-2"), doctest::Contains("NoScriptForModel"), Error);
    CHECK_THROWS_AS(parse_selftest_script("a | x | y\na | x | y\n", "M"), Error);
}

TEST_CASE("advance count equals step count for the shipped script") {
    auto lib = std::make_shared<SelfTestLibrary>();
    lib->load_dir(testing::data_dir() / "desk" / "selftest");
    SelfTestManager mgr(lib);
    auto s = mgr.start("SV-5000");
    const auto n = s.script().steps.size();
    CHECK(n > 0);
    std::size_t calls = 0;
    while (!mgr.get(s.session_id()).complete()) {
        mgr.advance(s.session_id(), StepResult::skipped);
        ++calls;
    }
    CHECK(calls == n);
    CHECK(mgr.get(s.session_id()).report().skipped == n);
    CHECK_THROWS_WITH_AS(mgr.advance("nope", StepResult::pass), doctest::Contains("UnknownSession"), Error);
}

TEST_CASE("one task every 30 days over 90 gives three events") {
    auto p = parse_device_profile("t1 | inspect cable | 30\n", "M");
    auto plan = generate_maintenance_plan(p, 90, 2024y / 1 / 1);
    REQUIRE(plan.events.size() == 3);
    CHECK(format_date(plan.events[0].date) == "2024-01-31");
    CHECK(format_date(plan.events[2].date) == "2024-03-31");
    CHECK(plan.events[0].uid == "t1-20240131");
    CHECK(format_date(plan.tasks[0].next_due) == "2024-01-31");
}

TEST_CASE("event count is the sum of floor(horizon / interval)") {
    auto p = parse_device_profile(read_file(testing::data_dir() / "desk" / "maintenance" / "SV-5000.txt"), "SV-5000");
    for (int h : {1, 29, 30, 89, 90, 365, 400, 1000}) {
        auto plan = generate_maintenance_plan(p, h, 2024y / 2 / 29);
        std::size_t want = 0;
        for (const auto& t : p.tasks) want += static_cast<std::size_t>(h / t.interval_days);
        CAPTURE(h);
        CHECK(plan.events.size() == want);
        for (std::size_t i = 1; i < plan.events.size(); ++i) {
            const auto& a = plan.events[i - 1];
            const auto& b = plan.events[i];
            CHECK((sys_days(a.date) < sys_days(b.date) || (a.date == b.date && a.task_id < b.task_id)));
        }
        for (const auto& t : plan.tasks) CHECK(sys_days(t.next_due) >= sys_days(plan.created));
    }
}

TEST_CASE("horizon and profile errors") {
    auto p = parse_device_profile("t1 | x | 30\n", "M");
    CHECK_THROWS_WITH_AS(generate_maintenance_plan(p, 0, 2024y / 1 / 1), doctest::Contains("InvalidHorizon"), Error);
    DeviceProfile empty{"M", {}};
    CHECK_THROWS_WITH_AS(generate_maintenance_plan(empty, 30, 2024y / 1 / 1), doctest::Contains("EmptyProfile"),
                         Error);
    CHECK_THROWS_AS(parse_device_profile("t1 | x | 0\n", "M"), Error);
    MaintenanceLibrary lib;
    CHECK_THROWS_WITH_AS(lib.find("M"), doctest::Contains("EmptyProfile"), Error);
}

namespace {

// Minimal RFC 5545 reader: CRLF lines, unfolds continuation lines, collects
// (UID, DTSTART) per VEVENT.
std::set<std::pair<std::string, std::string>> ics_events(const std::string& doc) {
    std::vector<std::string> raw;
    std::size_t pos = 0;
    while (pos < doc.size()) {
        auto end = doc.find("\r\n", pos);
        REQUIRE(end != std::string::npos);
        raw.push_back(doc.substr(pos, end - pos));
        pos = end + 2;
    }
    std::vector<std::string> lines;
    for (auto& l : raw) {
        CHECK(l.size() <= 75);
        if (!l.empty() && (l[0] == ' ' || l[0] == '\t'))
            lines.back() += l.substr(1);
        else
            lines.push_back(l);
    }
    REQUIRE(!lines.empty());
    CHECK(lines.front() == "BEGIN:VCALENDAR");
    CHECK(lines.back() == "END:VCALENDAR");
    std::set<std::pair<std::string, std::string>> out;
    std::string uid, start;
    bool in_event = false;
    for (const auto& l : lines) {
        if (l == "BEGIN:VEVENT") {
            in_event = true;
            uid.clear();
            start.clear();
        } else if (l == "END:VEVENT") {
            CHECK(in_event);
            out.emplace(uid, start);
            in_event = false;
        } else if (in_event) {
            auto colon = l.find(':');
            auto name = l.substr(0, l.find_first_of(";:"));
            if (name == "UID") uid = l.substr(colon + 1);
            if (name == "DTSTART") start = l.substr(colon + 1);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("iCalendar export round trips through an independent reader") {
    auto p = parse_device_profile(
        "t1 | a task whose title is long enough that the summary line must be folded somewhere past "
        "seventy five octets | 30\nt2 | short | 45\n",
        "SV-5000");
    auto plan = generate_maintenance_plan(p, 365, 2024y / 1 / 1);
    auto got = ics_events(export_icalendar(plan));
    std::set<std::pair<std::string, std::string>> want;
    for (const auto& e : plan.events) want.emplace(e.uid, format_date_compact(e.date));
    CHECK(got == want);
    CHECK(got.size() == 12 + 8);
    for (const auto& [uid, date] : got) CHECK(uid.substr(uid.size() - 8) == date);
}

TEST_CASE("ics file provider writes per model") {
    testing::TempDir dir;
    IcsFileCalendar cal(dir.path());
    auto plan = generate_maintenance_plan(parse_device_profile("t1 | x | 30\n", "SV-5000"), 60, 2024y / 1 / 1);
    cal.publish(plan);
    CHECK(read_file(cal.path_for("SV-5000")) == export_icalendar(plan));
}
