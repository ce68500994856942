#include "bmet/rag/knowledge_base.hpp"

#include <algorithm>
#include <mutex>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/rag/json_codec.hpp"

namespace bmet::rag {

namespace {

std::size_t slot_of(corpus::DocClass cls) {
    for (std::size_t i = 0; i < kSegmentClasses.size(); ++i) {
        if (kSegmentClasses[i] == cls) return i;
    }
    throw Error(Errc::InvalidArgument, "no segment for doc class");
}

}  // namespace

std::filesystem::path segment_path(const std::filesystem::path& dir, std::string_view device_class,
                                   corpus::DocClass cls) {
    return dir / "segments" / std::string(device_class) / (std::string(corpus::doc_class_name(cls)) + ".seg");
}

KnowledgeBase::KnowledgeBase(embedding::EmbedderSpec spec, IndexSettings index) : spec_(spec), index_(index) {
    spec_.validate();
    index_.hnsw.validate();
}

void KnowledgeBase::register_device(const std::string& device_model, const std::string& device_class) {
    std::unique_lock lock(mu_);
    auto it = devices_.find(device_model);
    if (it != devices_.end() && it->second != device_class)
        throw Error(Errc::InvalidArgument, device_model + " already registered under class " + it->second);
    devices_[device_model] = device_class;
    if (!segments_.contains(device_class)) {
        SegmentSet set;
        for (std::size_t i = 0; i < kSegmentClasses.size(); ++i) {
            set[i] = std::make_unique<vecstore::StoreSegment>(std::string(corpus::doc_class_name(kSegmentClasses[i])),
                                                              device_class, spec_, index_.kind, index_.hnsw);
        }
        segments_.emplace(device_class, std::move(set));
    }
}

std::optional<std::string> KnowledgeBase::device_class_of(std::string_view device_model) const {
    std::shared_lock lock(mu_);
    auto it = devices_.find(device_model);
    if (it == devices_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> KnowledgeBase::device_models() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [m, _] : devices_) out.push_back(m);
    return out;
}

std::vector<std::string> KnowledgeBase::device_classes() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [c, _] : segments_) out.push_back(c);
    return out;
}

vecstore::StoreSegment* KnowledgeBase::segment(std::string_view device_class, corpus::DocClass cls) {
    std::shared_lock lock(mu_);
    auto it = segments_.find(device_class);
    if (it == segments_.end()) return nullptr;
    return it->second[slot_of(cls)].get();
}

const vecstore::StoreSegment* KnowledgeBase::segment(std::string_view device_class, corpus::DocClass cls) const {
    return const_cast<KnowledgeBase*>(this)->segment(device_class, cls);
}

std::vector<SegmentStatus> KnowledgeBase::status() const {
    std::shared_lock lock(mu_);
    std::vector<SegmentStatus> out;
    for (const auto& [cls, set] : segments_) {
        for (const auto& seg : set) out.push_back({cls, seg->name(), seg->size()});
    }
    return out;
}

void KnowledgeBase::add_chunk(ChunkRecord record, std::span<const float> vector) {
    std::unique_lock lock(mu_);
    auto dev = devices_.find(record.device_model);
    if (dev == devices_.end()) throw Error(Errc::InvalidArgument, "unregistered device " + record.device_model);
    if (chunks_.contains(record.chunk_id)) throw Error(Errc::DuplicateId, "duplicate chunk id " + record.chunk_id);
    auto& seg = *segments_.at(dev->second)[slot_of(record.doc_class)];
    seg.insert(record.chunk_id, vector, record.doc_id);
    auto id = record.chunk_id;
    chunks_.emplace(std::move(id), std::move(record));
}

std::optional<ChunkRecord> KnowledgeBase::chunk(std::string_view chunk_id) const {
    std::shared_lock lock(mu_);
    auto it = chunks_.find(std::string(chunk_id));
    if (it == chunks_.end()) return std::nullopt;
    return it->second;
}

std::size_t KnowledgeBase::chunk_count() const {
    std::shared_lock lock(mu_);
    return chunks_.size();
}

std::vector<std::string> KnowledgeBase::chunk_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    out.reserve(chunks_.size());
    for (const auto& [id, _] : chunks_) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

std::shared_ptr<const tools::ErrorCatalog> KnowledgeBase::catalog(std::string_view device_model) const {
    std::shared_lock lock(mu_);
    auto it = catalogs_.find(device_model);
    return it == catalogs_.end() ? nullptr : it->second;
}

void KnowledgeBase::set_catalog(const std::string& device_model, tools::ErrorCatalog catalog) {
    std::unique_lock lock(mu_);
    catalogs_[device_model] = std::make_shared<const tools::ErrorCatalog>(std::move(catalog));
}

bool KnowledgeBase::remove_catalog_code(std::string_view device_model, std::string_view code) {
    std::unique_lock lock(mu_);
    auto it = catalogs_.find(device_model);
    if (it == catalogs_.end()) return false;
    auto copy = *it->second;
    if (!copy.erase(code)) return false;
    it->second = std::make_shared<const tools::ErrorCatalog>(std::move(copy));
    return true;
}

void KnowledgeBase::write_chunks(const std::filesystem::path& dir) const {
    std::vector<const ChunkRecord*> rows;
    rows.reserve(chunks_.size());
    for (const auto& [_, c] : chunks_) rows.push_back(&c);
    std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->chunk_id < b->chunk_id; });
    std::string out;
    for (const auto* c : rows) {
        out += to_json(*c).dump();
        out += '\n';
    }
    write_file_atomic(dir / "chunks.jsonl", out);
}

void KnowledgeBase::persist(const std::filesystem::path& dir) const {
    std::shared_lock lock(mu_);
    std::filesystem::create_directories(dir);

    Json meta{{"format", kKnowledgeBaseFormat},
              {"embedder", to_json(spec_)},
              {"index_kind", vecstore::index_kind_name(index_.kind)},
              {"hnsw", to_json(index_.hnsw)},
              {"devices", Json::object()}};
    for (const auto& [m, c] : devices_) meta["devices"][m] = c;
    write_file_atomic(dir / "kb.json", meta.dump(2) + "\n");

    write_chunks(dir);

    std::string cat;
    for (const auto& [model, catalog] : catalogs_) {
        for (const auto& [_, e] : catalog->entries()) {
            auto j = to_json(e);
            j["device_model"] = model;
            cat += j.dump();
            cat += '\n';
        }
    }
    write_file_atomic(dir / "catalogs.jsonl", cat);

    for (const auto& [cls, set] : segments_) {
        std::filesystem::create_directories(dir / "segments" / cls);
        for (std::size_t i = 0; i < set.size(); ++i) set[i]->persist(segment_path(dir, cls, kSegmentClasses[i]));
    }
}

void KnowledgeBase::persist_segment(const std::filesystem::path& dir, std::string_view device_class,
                                    corpus::DocClass cls) const {
    std::shared_lock lock(mu_);
    auto it = segments_.find(device_class);
    if (it == segments_.end()) throw Error(Errc::InvalidArgument, "unknown device class " + std::string(device_class));
    std::filesystem::create_directories(dir / "segments" / std::string(device_class));
    // Segment first: a chunk row without a vector is harmless, the reverse is not.
    it->second[slot_of(cls)]->persist(segment_path(dir, device_class, cls));
    write_chunks(dir);
}

bool KnowledgeBase::exists(const std::filesystem::path& dir) {
    return std::filesystem::is_regular_file(dir / "kb.json");
}

std::unique_ptr<KnowledgeBase> KnowledgeBase::load(const std::filesystem::path& dir,
                                                   const std::optional<embedding::EmbedderSpec>& expected) {
    if (!exists(dir)) throw Error(Errc::MissingStores, "no knowledge base under " + dir.string());
    Json meta;
    try {
        meta = Json::parse(read_file(dir / "kb.json"));
    } catch (const Json::exception& e) {
        throw Error(Errc::CorruptFile, std::string("kb.json: ") + e.what());
    }
    if (meta.value("format", 0u) != kKnowledgeBaseFormat)
        throw Error(Errc::FormatVersionMismatch, "unsupported knowledge base format");

    auto spec = embedder_spec_from_json(meta.at("embedder"));
    if (expected && !(*expected == spec))
        throw Error(Errc::EmbedderSpecMismatch, "stores were built with a different embedder spec");
    IndexSettings index;
    auto kind = vecstore::parse_index_kind(meta.at("index_kind").get<std::string>());
    if (!kind) throw Error(Errc::CorruptFile, "unknown index kind");
    index.kind = *kind;
    index.hnsw = hnsw_params_from_json(meta.at("hnsw"));

    auto kb = std::make_unique<KnowledgeBase>(spec, index);
    for (const auto& [model, cls] : meta.at("devices").items()) kb->register_device(model, cls.get<std::string>());

    for (auto& [cls, set] : kb->segments_) {
        for (std::size_t i = 0; i < set.size(); ++i) {
            auto path = segment_path(dir, cls, kSegmentClasses[i]);
            if (!std::filesystem::exists(path)) throw Error(Errc::MissingStores, "missing segment " + path.string());
            *set[i] = vecstore::StoreSegment::load(path, spec);
        }
    }

    auto parse_lines = [&](const std::filesystem::path& p, auto&& fn) {
        if (!std::filesystem::exists(p)) throw Error(Errc::MissingStores, "missing " + p.string());
        auto text = read_file(p);
        for (auto line : split_lines(text)) {
            if (trim(line).empty()) continue;
            try {
                fn(Json::parse(line));
            } catch (const Json::exception& e) {
                throw Error(Errc::CorruptFile, p.filename().string() + ": " + e.what());
            }
        }
    };

    parse_lines(dir / "chunks.jsonl", [&](const Json& j) {
        auto c = chunk_record_from_json(j);
        auto id = c.chunk_id;
        kb->chunks_.emplace(std::move(id), std::move(c));
    });

    std::map<std::string, tools::ErrorCatalog> catalogs;
    parse_lines(dir / "catalogs.jsonl", [&](const Json& j) {
        catalogs[j.at("device_model").get<std::string>()].add(error_entry_from_json(j));
    });
    for (auto& [model, cat] : catalogs) kb->set_catalog(model, std::move(cat));
    return kb;
}

}  // namespace bmet::rag
