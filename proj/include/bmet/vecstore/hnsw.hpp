#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace bmet::vecstore {

struct HnswParams {
    std::uint32_t M = 16;
    std::uint32_t ef_construction = 200;
    std::uint32_t ef_search = 64;
    std::uint64_t level_seed = 42;

    void validate() const;
    bool operator==(const HnswParams&) const = default;
};

// Hierarchical navigable small-world graph over externally stored unit vectors.
// Similarity is the inner product; nodes are dense indices 0..n-1 in insertion
// order. Node levels are a pure function of (level_seed, node index), so the
// same insertion sequence always produces the same graph.
class HnswGraph {
public:
    using VectorAt = std::function<std::span<const float>(std::uint32_t)>;

    explicit HnswGraph(HnswParams params = {});

    const HnswParams& params() const noexcept { return params_; }
    std::size_t size() const noexcept { return links_.size(); }
    int max_level() const noexcept { return max_level_; }
    std::int64_t entry_point() const noexcept { return entry_point_; }

    int level_for(std::uint32_t node) const noexcept;

    // Adds node `size()`; `vec_at` must already resolve it.
    void add(const VectorAt& vec_at);

    // Up to `ef` best (similarity, node) pairs at layer 0, best first. Nodes
    // rejected by `accept` still route the search but are not returned.
    std::vector<std::pair<double, std::uint32_t>> search(std::span<const float> query, std::size_t ef,
                                                         const VectorAt& vec_at,
                                                         const std::function<bool(std::uint32_t)>& accept) const;

    const std::vector<std::uint32_t>& neighbors(std::uint32_t node, int level) const {
        return links_[node][static_cast<std::size_t>(level)];
    }

    // Raw adjacency access for persistence.
    const std::vector<std::vector<std::vector<std::uint32_t>>>& links() const noexcept { return links_; }
    void restore(std::vector<std::vector<std::vector<std::uint32_t>>> links, std::int64_t entry_point, int max_level);

private:
    using Candidate = std::pair<double, std::uint32_t>;

    std::vector<Candidate> search_layer(std::span<const float> query, std::uint32_t entry, std::size_t ef,
                                        int level, const VectorAt& vec_at) const;
    std::vector<Candidate> select_neighbors(std::vector<Candidate> candidates, std::size_t max_links,
                                            const VectorAt& vec_at) const;
    void shrink_links(std::uint32_t node, int level, const VectorAt& vec_at);

    HnswParams params_;
    double level_mult_;
    // links_[node][level] = neighbor ids
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;
    std::int64_t entry_point_ = -1;
    int max_level_ = -1;
};

}  // namespace bmet::vecstore
