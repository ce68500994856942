#include "bmet/vecstore/segment.hpp"

#include <zlib.h>

#include <algorithm>
#include <mutex>

#include "bmet/common/binary_io.hpp"
#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/vecstore/kernels.hpp"

namespace bmet::vecstore {

std::string_view index_kind_name(IndexKind k) noexcept { return k == IndexKind::flat ? "flat" : "hnsw"; }

std::optional<IndexKind> parse_index_kind(std::string_view s) noexcept {
    if (s == "flat") return IndexKind::flat;
    if (s == "hnsw") return IndexKind::hnsw;
    return std::nullopt;
}

bool hit_before(const SearchHit& a, const SearchHit& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    if (a.chunk_id != b.chunk_id) return a.chunk_id < b.chunk_id;
    return a.segment_name < b.segment_name;
}

StoreSegment::StoreSegment(std::string name, std::string device_class, embedding::EmbedderSpec spec,
                           IndexKind kind, HnswParams params)
    : name_(std::move(name)),
      device_class_(std::move(device_class)),
      spec_(spec),
      kind_(kind),
      graph_(params),
      mu_(std::make_unique<std::shared_mutex>()) {
    spec_.validate();
}

StoreSegment::StoreSegment(StoreSegment&&) noexcept = default;
StoreSegment& StoreSegment::operator=(StoreSegment&&) noexcept = default;
StoreSegment::~StoreSegment() = default;

std::size_t StoreSegment::size() const {
    std::shared_lock lock(*mu_);
    return live_;
}

std::size_t StoreSegment::node_count() const {
    std::shared_lock lock(*mu_);
    return graph_.size();
}

bool StoreSegment::contains(std::string_view chunk_id) const {
    std::shared_lock lock(*mu_);
    auto it = by_id_.find(std::string(chunk_id));
    return it != by_id_.end() && !tombstone_[it->second];
}

std::optional<std::string> StoreSegment::payload_ref(std::string_view chunk_id) const {
    std::shared_lock lock(*mu_);
    auto it = by_id_.find(std::string(chunk_id));
    if (it == by_id_.end() || tombstone_[it->second]) return std::nullopt;
    return payloads_[it->second];
}

std::vector<std::string> StoreSegment::chunk_ids() const {
    std::shared_lock lock(*mu_);
    std::vector<std::string> out;
    out.reserve(live_);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!tombstone_[i]) out.push_back(ids_[i]);
    }
    return out;
}

void StoreSegment::insert(const std::string& chunk_id, std::span<const float> vector, std::string payload_ref) {
    if (vector.size() != spec_.dimension)
        throw Error(Errc::DimensionMismatch,
                    "segment " + name_ + " expects " + std::to_string(spec_.dimension) + ", got " +
                        std::to_string(vector.size()));
    std::unique_lock lock(*mu_);
    if (by_id_.contains(chunk_id)) throw Error(Errc::DuplicateId, chunk_id);
    const auto index = static_cast<std::uint32_t>(ids_.size());
    ids_.push_back(chunk_id);
    payloads_.push_back(std::move(payload_ref));
    tombstone_.push_back(0);
    vectors_.insert(vectors_.end(), vector.begin(), vector.end());
    by_id_.emplace(chunk_id, index);
    ++live_;
    graph_.add([this](std::uint32_t i) { return row(i); });
}

bool StoreSegment::remove(std::string_view chunk_id) {
    std::unique_lock lock(*mu_);
    auto it = by_id_.find(std::string(chunk_id));
    if (it == by_id_.end() || tombstone_[it->second]) return false;
    tombstone_[it->second] = 1;
    --live_;
    return true;
}

void StoreSegment::rebuild() {
    std::unique_lock lock(*mu_);
    std::vector<std::string> ids;
    std::vector<std::string> payloads;
    std::vector<float> vectors;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (tombstone_[i]) continue;
        ids.push_back(ids_[i]);
        payloads.push_back(payloads_[i]);
        auto r = row(static_cast<std::uint32_t>(i));
        vectors.insert(vectors.end(), r.begin(), r.end());
    }
    ids_ = std::move(ids);
    payloads_ = std::move(payloads);
    vectors_ = std::move(vectors);
    tombstone_.assign(ids_.size(), 0);
    by_id_.clear();
    for (std::uint32_t i = 0; i < ids_.size(); ++i) by_id_.emplace(ids_[i], i);
    live_ = ids_.size();
    graph_ = HnswGraph(graph_.params());
    for (std::size_t i = 0; i < ids_.size(); ++i) graph_.add([this](std::uint32_t j) { return row(j); });
}

void StoreSegment::check_query(std::span<const float> query) const {
    if (query.size() != spec_.dimension)
        throw Error(Errc::DimensionMismatch,
                    "query has " + std::to_string(query.size()) + " dims, segment " + std::to_string(spec_.dimension));
}

std::vector<SearchHit> StoreSegment::search(std::span<const float> query, std::size_t k) const {
    return kind_ == IndexKind::flat ? search_flat(query, k) : search_hnsw(query, k);
}

std::vector<SearchHit> StoreSegment::search_flat(std::span<const float> query, std::size_t k) const {
    check_query(query);
    if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
    std::shared_lock lock(*mu_);
    if (live_ == 0) throw Error(Errc::EmptySegment, name_);
    return flat_locked(query, k);
}

std::vector<SearchHit> StoreSegment::search_hnsw(std::span<const float> query, std::size_t k,
                                                 std::optional<std::size_t> ef) const {
    check_query(query);
    if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
    std::shared_lock lock(*mu_);
    if (live_ == 0) throw Error(Errc::EmptySegment, name_);
    const std::size_t beam = std::max<std::size_t>(ef.value_or(graph_.params().ef_search), k);
    return hnsw_locked(query, k, beam);
}

std::vector<SearchHit> StoreSegment::flat_locked(std::span<const float> query, std::size_t k) const {
    std::vector<double> scores(ids_.size());
    score_rows(vectors_, spec_.dimension, query, scores);
    std::vector<std::uint32_t> order;
    order.reserve(live_);
    for (std::uint32_t i = 0; i < ids_.size(); ++i) {
        if (!tombstone_[i]) order.push_back(i);
    }
    auto before = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids_[a] < ids_[b];
    };
    const std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), before);
    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) hits.push_back({ids_[order[i]], scores[order[i]], name_});
    return hits;
}

std::vector<SearchHit> StoreSegment::hnsw_locked(std::span<const float> query, std::size_t k, std::size_t ef) const {
    auto found = graph_.search(
        query, ef, [this](std::uint32_t i) { return row(i); },
        [this](std::uint32_t i) { return tombstone_[i] == 0; });
    std::vector<SearchHit> hits;
    hits.reserve(found.size());
    for (const auto& [score, node] : found) hits.push_back({ids_[node], score, name_});
    std::sort(hits.begin(), hits.end(), hit_before);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

namespace {

constexpr char kMagic[8] = {'B', 'M', 'E', 'T', 'S', 'E', 'G', '\0'};

void write_spec(BinaryWriter& w, const embedding::EmbedderSpec& s) {
    w.u8(static_cast<std::uint8_t>(s.provider));
    w.u32(s.dimension);
    w.u32(s.ngram_min);
    w.u32(s.ngram_max);
    w.u64(s.seed);
}

embedding::EmbedderSpec read_spec(BinaryReader& r) {
    embedding::EmbedderSpec s;
    auto provider = r.u8();
    if (provider > 1) throw Error(Errc::CorruptFile, "unknown embedder provider");
    s.provider = static_cast<embedding::Provider>(provider);
    s.dimension = r.u32();
    s.ngram_min = r.u32();
    s.ngram_max = r.u32();
    s.seed = r.u64();
    return s;
}

std::uint32_t crc_of(std::string_view a, std::string_view b) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(a.data()), static_cast<uInt>(a.size()));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(b.data()), static_cast<uInt>(b.size()));
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

// Layout: magic | version | embedder spec | crc32(header + body) | body length | body.
// The body holds the segment identity, the entry table, the little-endian f32
// vector block and the HNSW adjacency lists.
std::string StoreSegment::serialize() const {
    std::shared_lock lock(*mu_);
    BinaryWriter head;
    head.raw(std::string_view(kMagic, sizeof(kMagic)));
    head.u32(kSegmentFormatVersion);
    write_spec(head, spec_);

    BinaryWriter body;
    body.str(name_);
    body.str(device_class_);
    body.u8(static_cast<std::uint8_t>(kind_));
    const auto& p = graph_.params();
    body.u32(p.M);
    body.u32(p.ef_construction);
    body.u32(p.ef_search);
    body.u64(p.level_seed);
    body.u64(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        body.str(ids_[i]);
        body.str(payloads_[i]);
        body.u8(static_cast<std::uint8_t>(tombstone_[i]));
    }
    for (float v : vectors_) body.f32(v);
    body.i64(graph_.entry_point());
    body.u32(static_cast<std::uint32_t>(graph_.max_level() + 1));
    for (const auto& layers : graph_.links()) {
        body.u32(static_cast<std::uint32_t>(layers.size()));
        for (const auto& list : layers) {
            body.u32(static_cast<std::uint32_t>(list.size()));
            for (auto n : list) body.u32(n);
        }
    }

    BinaryWriter out;
    out.raw(head.bytes());
    out.u32(crc_of(head.bytes(), body.bytes()));
    out.u64(body.bytes().size());
    out.raw(body.bytes());
    return std::move(out.bytes());
}

StoreSegment StoreSegment::deserialize(std::string_view bytes) {
    BinaryReader r(bytes);
    if (bytes.size() < sizeof(kMagic) || r.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic)))
        throw Error(Errc::CorruptFile, "bad magic");
    const auto version = r.u32();
    if (version != kSegmentFormatVersion)
        throw Error(Errc::FormatVersionMismatch, "segment format " + std::to_string(version));
    const auto spec = read_spec(r);
    const std::string_view head = bytes.substr(0, r.position());
    const auto crc = r.u32();
    const auto body_len = r.u64();
    if (body_len != r.remaining()) throw Error(Errc::CorruptFile, "length mismatch (truncated?)");
    const std::string_view body_bytes = r.take(body_len);
    if (crc_of(head, body_bytes) != crc) throw Error(Errc::CorruptFile, "checksum mismatch");

    BinaryReader b(body_bytes);
    auto name = b.str();
    auto device_class = b.str();
    auto kind = b.u8();
    if (kind > 1) throw Error(Errc::CorruptFile, "unknown index kind");
    HnswParams params;
    params.M = b.u32();
    params.ef_construction = b.u32();
    params.ef_search = b.u32();
    params.level_seed = b.u64();

    StoreSegment seg(std::move(name), std::move(device_class), spec, static_cast<IndexKind>(kind), params);
    const auto n = b.u64();
    if (n > body_len) throw Error(Errc::CorruptFile, "entry count");
    for (std::uint64_t i = 0; i < n; ++i) {
        seg.ids_.push_back(b.str());
        seg.payloads_.push_back(b.str());
        seg.tombstone_.push_back(static_cast<char>(b.u8()));
        seg.by_id_.emplace(seg.ids_.back(), static_cast<std::uint32_t>(i));
        if (!seg.tombstone_.back()) ++seg.live_;
    }
    seg.vectors_.resize(static_cast<std::size_t>(n) * spec.dimension);
    for (auto& v : seg.vectors_) v = b.f32();

    const auto entry = b.i64();
    const auto levels = static_cast<int>(b.u32()) - 1;
    std::vector<std::vector<std::vector<std::uint32_t>>> links(static_cast<std::size_t>(n));
    for (auto& layers : links) {
        const auto count = b.u32();
        if (count > 64) throw Error(Errc::CorruptFile, "level count");
        layers.resize(count);
        for (auto& list : layers) {
            const auto m = b.u32();
            if (m > n) throw Error(Errc::CorruptFile, "adjacency size");
            list.resize(m);
            for (auto& id : list) {
                id = b.u32();
                if (id >= n) throw Error(Errc::CorruptFile, "adjacency id");
            }
        }
    }
    if (b.remaining() != 0) throw Error(Errc::CorruptFile, "trailing bytes");
    seg.graph_.restore(std::move(links), entry, levels);
    return seg;
}

void StoreSegment::persist(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

StoreSegment StoreSegment::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

StoreSegment StoreSegment::load(const std::filesystem::path& path, const embedding::EmbedderSpec& expected) {
    auto seg = load(path);
    if (!(seg.embedder_spec() == expected))
        throw Error(Errc::EmbedderSpecMismatch,
                    path.filename().string() + " built with spec " + seg.embedder_spec().fingerprint());
    return seg;
}

std::vector<SearchHit> search_multi(std::span<const StoreSegment* const> segments, std::span<const float> query,
                                    std::size_t k) {
    if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
    std::vector<SearchHit> merged;
    const StoreSegment* first = nullptr;
    for (const auto* seg : segments) {
        if (!first) {
            first = seg;
        } else if (!(seg->embedder_spec() == first->embedder_spec())) {
            throw Error(Errc::MixedEmbedderSpec, seg->name() + " vs " + first->name());
        }
    }
    for (const auto* seg : segments) {
        if (seg->size() == 0) continue;
        try {
            auto hits = seg->search(query, k);
            merged.insert(merged.end(), std::make_move_iterator(hits.begin()), std::make_move_iterator(hits.end()));
        } catch (const Error& e) {
            // Racing removal can empty a segment between size() and search().
            if (e.code() != Errc::EmptySegment) throw;
        }
    }
    std::sort(merged.begin(), merged.end(), hit_before);
    if (merged.size() > k) merged.resize(k);
    return merged;
}

}  // namespace bmet::vecstore
