#include "bmet/vecstore/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"
#include "bmet/embedding/embedder.hpp"

namespace bmet::vecstore {

void HnswParams::validate() const {
    if (M < 2) throw Error(Errc::InvalidConfig, "HNSW M must be >= 2");
    if (ef_construction < 1 || ef_search < 1) throw Error(Errc::InvalidConfig, "HNSW ef must be >= 1");
}

HnswGraph::HnswGraph(HnswParams params)
    : params_(params), level_mult_(1.0 / std::log(static_cast<double>(std::max<std::uint32_t>(params.M, 2)))) {
    params_.validate();
}

int HnswGraph::level_for(std::uint32_t node) const noexcept {
    const std::uint64_t bits = mix64(params_.level_seed ^ mix64(node));
    double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    if (u <= 0.0) u = 0x1.0p-53;
    return std::min(static_cast<int>(-std::log(u) * level_mult_), 30);
}

namespace {

struct WorstFirst {
    bool operator()(const std::pair<double, std::uint32_t>& a, const std::pair<double, std::uint32_t>& b) const {
        // top() is the lowest similarity; among equals the highest id goes first.
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    }
};

struct BestFirst {
    bool operator()(const std::pair<double, std::uint32_t>& a, const std::pair<double, std::uint32_t>& b) const {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    }
};

bool better(const std::pair<double, std::uint32_t>& a, const std::pair<double, std::uint32_t>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
}

using MinHeap = std::priority_queue<std::pair<double, std::uint32_t>, std::vector<std::pair<double, std::uint32_t>>,
                                    WorstFirst>;
using MaxHeap = std::priority_queue<std::pair<double, std::uint32_t>, std::vector<std::pair<double, std::uint32_t>>,
                                    BestFirst>;

std::vector<std::pair<double, std::uint32_t>> beam_search(
    const std::vector<std::vector<std::vector<std::uint32_t>>>& links, std::span<const float> query,
    std::uint32_t entry, std::size_t ef, int level, const HnswGraph::VectorAt& vec_at,
    const std::function<bool(std::uint32_t)>* accept) {
    std::vector<char> visited(links.size(), 0);
    MaxHeap candidates;
    MinHeap results;

    const double entry_sim = embedding::dot(vec_at(entry), query);
    candidates.emplace(entry_sim, entry);
    if (!accept || (*accept)(entry)) results.emplace(entry_sim, entry);
    visited[entry] = 1;

    while (!candidates.empty()) {
        auto current = candidates.top();
        if (results.size() >= ef && current.first < results.top().first) break;
        candidates.pop();
        for (std::uint32_t next : links[current.second][static_cast<std::size_t>(level)]) {
            if (visited[next]) continue;
            visited[next] = 1;
            const double sim = embedding::dot(vec_at(next), query);
            if (results.size() < ef || sim > results.top().first) {
                candidates.emplace(sim, next);
                if (!accept || (*accept)(next)) {
                    results.emplace(sim, next);
                    if (results.size() > ef) results.pop();
                }
            }
        }
    }

    std::vector<std::pair<double, std::uint32_t>> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::sort(out.begin(), out.end(), better);
    return out;
}

}  // namespace

std::vector<HnswGraph::Candidate> HnswGraph::search_layer(std::span<const float> query, std::uint32_t entry,
                                                          std::size_t ef, int level, const VectorAt& vec_at) const {
    return beam_search(links_, query, entry, ef, level, vec_at, nullptr);
}

std::vector<HnswGraph::Candidate> HnswGraph::select_neighbors(std::vector<Candidate> candidates,
                                                              std::size_t max_links,
                                                              const VectorAt& vec_at) const {
    std::sort(candidates.begin(), candidates.end(), better);
    if (candidates.size() <= max_links) return candidates;
    // Keep a candidate only if it is closer to the base than to every neighbor kept so far.
    std::vector<Candidate> kept;
    kept.reserve(max_links);
    for (const auto& cand : candidates) {
        if (kept.size() >= max_links) break;
        const auto cand_vec = vec_at(cand.second);
        bool diverse = true;
        for (const auto& k : kept) {
            if (embedding::dot(cand_vec, vec_at(k.second)) > cand.first) {
                diverse = false;
                break;
            }
        }
        if (diverse) kept.push_back(cand);
    }
    return kept;
}

void HnswGraph::shrink_links(std::uint32_t node, int level, const VectorAt& vec_at) {
    auto& list = links_[node][static_cast<std::size_t>(level)];
    const std::size_t max_links = level == 0 ? 2 * params_.M : params_.M;
    if (list.size() <= max_links) return;
    const auto base = vec_at(node);
    std::vector<Candidate> cands;
    cands.reserve(list.size());
    for (std::uint32_t other : list) cands.emplace_back(embedding::dot(base, vec_at(other)), other);
    auto kept = select_neighbors(std::move(cands), max_links, vec_at);
    list.clear();
    for (const auto& k : kept) list.push_back(k.second);
}

void HnswGraph::add(const VectorAt& vec_at) {
    const auto node = static_cast<std::uint32_t>(links_.size());
    const int level = level_for(node);
    links_.emplace_back(static_cast<std::size_t>(level) + 1);

    if (entry_point_ < 0) {
        entry_point_ = node;
        max_level_ = level;
        return;
    }

    const auto query = vec_at(node);
    auto current = static_cast<std::uint32_t>(entry_point_);
    for (int l = max_level_; l > level; --l) {
        auto nearest = search_layer(query, current, 1, l, vec_at);
        current = nearest.front().second;
    }
    for (int l = std::min(level, max_level_); l >= 0; --l) {
        auto candidates = search_layer(query, current, params_.ef_construction, l, vec_at);
        current = candidates.front().second;
        auto chosen = select_neighbors(candidates, params_.M, vec_at);
        auto& mine = links_[node][static_cast<std::size_t>(l)];
        for (const auto& c : chosen) {
            mine.push_back(c.second);
            links_[c.second][static_cast<std::size_t>(l)].push_back(node);
            shrink_links(c.second, l, vec_at);
        }
    }
    if (level > max_level_) {
        max_level_ = level;
        entry_point_ = node;
    }
}

std::vector<std::pair<double, std::uint32_t>> HnswGraph::search(
    std::span<const float> query, std::size_t ef, const VectorAt& vec_at,
    const std::function<bool(std::uint32_t)>& accept) const {
    if (entry_point_ < 0) return {};
    auto current = static_cast<std::uint32_t>(entry_point_);
    for (int l = max_level_; l > 0; --l) {
        auto nearest = search_layer(query, current, 1, l, vec_at);
        current = nearest.front().second;
    }
    return beam_search(links_, query, current, std::max<std::size_t>(ef, 1), 0, vec_at, accept ? &accept : nullptr);
}

void HnswGraph::restore(std::vector<std::vector<std::vector<std::uint32_t>>> links, std::int64_t entry_point,
                        int max_level) {
    links_ = std::move(links);
    entry_point_ = entry_point;
    max_level_ = max_level;
}

}  // namespace bmet::vecstore
