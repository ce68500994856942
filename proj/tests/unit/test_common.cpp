#include <doctest.h>

#include "bmet/common/binary_io.hpp"
#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/common/time.hpp"
#include "bmet/common/url.hpp"
#include "support.hpp"

using namespace bmet;

TEST_CASE("trim and split") {
    CHECK(trim("  a b \t\n") == "a b");
    CHECK(trim("   ").empty());
    auto parts = split("a|b||c", '|');
    REQUIRE(parts.size() == 4);
    CHECK(parts[2].empty());
    auto lines = split_lines("x\r\ny\nz");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "x");
}

TEST_CASE("sha256 matches the FIPS 180-2 test vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("edit distance on textbook pairs") {
    CHECK(edit_distance("kitten", "sitting") == 3);
    CHECK(edit_distance("", "abc") == 3);
    CHECK(edit_distance("E-042", "E-O42") == 1);
    CHECK(edit_distance("same", "same") == 0);
}

TEST_CASE("utf8 floor never splits a code point") {
    std::string s = "a\xC3\xA9z";  // a é z
    CHECK(utf8_floor(s, 2) == 1);
    CHECK(utf8_floor(s, 3) == 3);
    CHECK(utf8_encode(utf8_decode(s)) == s);
}

TEST_CASE("slugify") {
    CHECK(slugify("SV-5000 User Manual") == "sv-5000-user-manual");
    CHECK(slugify("  --Hello,  World!") == "hello-world");
}

TEST_CASE("iso8601 round trip") {
    Timestamp t{std::chrono::milliseconds{1709287200000}};
    CHECK(format_iso8601(t) == "2024-03-01T10:00:00Z");
    CHECK(parse_iso8601("2024-03-01T10:00:00Z") == t);
    CHECK(parse_iso8601("2024-03-01 12:00:00+02:00") == t);
    CHECK(format_iso8601(t + std::chrono::milliseconds{5}) == "2024-03-01T10:00:00.005Z");
    CHECK_FALSE(parse_iso8601("2024-13-01T00:00:00Z"));
    auto d = parse_date("2024-02-29");
    REQUIRE(d);
    CHECK(format_date_compact(*d) == "20240229");
    CHECK_FALSE(parse_date("2023-02-29"));
}

TEST_CASE("binary reader rejects overruns") {
    BinaryWriter w;
    w.u32(7);
    w.str("abc");
    w.f32(1.5f);
    BinaryReader r(w.bytes());
    CHECK(r.u32() == 7);
    CHECK(r.str() == "abc");
    CHECK(r.f32() == 1.5f);
    CHECK_THROWS_AS(r.u8(), Error);
}

TEST_CASE("split_url") {
    auto u = split_url("http://127.0.0.1:8089/embed/v1");
    REQUIRE(u);
    CHECK(u->origin == "http://127.0.0.1:8089");
    CHECK(u->path == "/embed/v1");
    CHECK_FALSE(split_url("ftp://x/y"));
}

TEST_CASE("atomic write replaces the file") {
    testing::TempDir dir;
    auto p = dir / "f.txt";
    write_file_atomic(p, "one");
    write_file_atomic(p, "two");
    CHECK(read_file(p) == "two");
    CHECK_THROWS_AS(read_file(dir / "missing"), Error);
}

TEST_CASE("error carries its code name") {
    Error e(Errc::DuplicateVote, "x");
    CHECK(e.code_name() == "DuplicateVote");
    CHECK(std::string(e.what()).rfind("DuplicateVote", 0) == 0);
}
