#include "bmet/corpus/manifest.hpp"

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::corpus {

std::vector<ManifestRecord> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
    std::vector<ManifestRecord> records;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split(t, '|');
        if (fields.size() < 5 || fields.size() > 6)
            throw Error(Errc::InvalidArgument, "manifest line " + std::to_string(line_no) + ": expected 5 or 6 fields");
        ManifestRecord rec;
        rec.line_no = line_no;
        rec.path = base_dir / std::string(trim(fields[0]));
        rec.meta.device_model = std::string(trim(fields[1]));
        auto doc_class = parse_doc_class(trim(fields[2]));
        if (!doc_class)
            throw Error(Errc::InvalidArgument,
                        "manifest line " + std::to_string(line_no) + ": unknown doc_class " + std::string(trim(fields[2])));
        rec.meta.doc_class = *doc_class;
        rec.meta.language = std::string(trim(fields[3]));
        rec.meta.title = std::string(trim(fields[4]));
        if (fields.size() == 6 && !trim(fields[5]).empty()) rec.device_class = std::string(trim(fields[5]));
        if (rec.meta.device_model.empty() || rec.meta.title.empty())
            throw Error(Errc::InvalidArgument, "manifest line " + std::to_string(line_no) + ": empty field");
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw Error(Errc::EmptyManifest, "no documents listed");
    return records;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& manifest_path) {
    return parse_manifest(read_file(manifest_path), manifest_path.parent_path());
}

}  // namespace bmet::corpus
