#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bmet {

std::string_view trim(std::string_view s) noexcept;
std::vector<std::string_view> split(std::string_view s, char delim);
std::vector<std::string_view> split_lines(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix) noexcept;

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);

// Largest offset <= pos that does not land inside a UTF-8 sequence.
std::size_t utf8_floor(std::string_view s, std::size_t pos) noexcept;

// 64-bit FNV-1a, seeded by folding the seed into the offset basis.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0) noexcept;
std::uint64_t mix64(std::uint64_t x) noexcept;

std::string to_hex(const unsigned char* data, std::size_t n);
std::string sha256_hex(std::string_view data);
std::string random_hex(std::size_t n_bytes);

std::string read_file(const std::filesystem::path& path);
// Writes through a sibling temp file and renames into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

// Levenshtein distance over bytes.
std::size_t edit_distance(std::string_view a, std::string_view b);

// Lowercase ASCII slug: alnum runs joined by '-'.
std::string slugify(std::string_view s);

}  // namespace bmet
