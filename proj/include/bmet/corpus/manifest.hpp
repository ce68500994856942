#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bmet/corpus/document.hpp"

namespace bmet::corpus {

inline constexpr std::string_view kDefaultDeviceClass = "general";

struct ManifestRecord {
    std::filesystem::path path;  // resolved against the manifest's directory
    DocumentMeta meta;
    std::string device_class{kDefaultDeviceClass};
    std::size_t line_no = 0;
};

// Reads `path | device_model | doc_class | language | title [| device_class]`
// records; '#' lines are comments. Throws Error(EmptyManifest) when no record
// is present and Error(InvalidArgument) on a malformed record.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& manifest_path);
std::vector<ManifestRecord> parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

}  // namespace bmet::corpus
