#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cort/corpus.hpp"
#include "cort/types.hpp"

namespace cort {

struct DenseHit {
    InternalId doc = 0;
    double score = 0.0;  // dot product of unit vectors
};

/// Flat index of unit-norm representations split into P contiguous,
/// near-equal partitions (sizes differ by at most one). Partitioning models
/// distributing the corpus across P devices; searches scan partitions
/// independently and aggregate, which returns exactly the same top-k as a
/// single-partition scan.
class DenseIndex {
public:
    /// Rows must be unit norm within 1e-5.
    static DenseIndex build(const ContextEmbeddingStore& representations,
                            std::uint32_t partitions);

    /// Top-k by dot product, ties toward the smaller internal id.
    /// If k exceeds the corpus size the full sorted list comes back.
    /// `threads` > 1 scans partitions concurrently; the merge is ordered, so
    /// results do not depend on the thread count.
    std::vector<DenseHit> search(std::span<const float> query, std::size_t k,
                                 unsigned threads = 1) const;

    Ranking search_ranking(const std::string& query_id, std::span<const float> query,
                           std::size_t k, unsigned threads = 1) const;

    std::size_t size() const { return dim_ == 0 ? 0 : vectors_.size() / dim_; }
    std::uint32_t dim() const { return dim_; }
    std::uint32_t partitions() const { return partitions_; }

    /// Row range [first, last) of one partition.
    std::pair<std::size_t, std::size_t> partition_range(std::uint32_t p) const;

    const float* row(std::size_t i) const { return vectors_.data() + i * dim_; }
    const IdMap& ids() const { return ids_; }

    double dot(std::span<const float> query, std::size_t r) const;

    /// Index file: magic "CORTIDX1", u32 count, u32 e, u32 P, then the
    /// vectors as f32 little-endian row-major. External ids live in the
    /// sidecar id file, one per line.
    void save(const std::string& vec_path, const std::string& id_path) const;
    static DenseIndex load(const std::string& vec_path, const std::string& id_path);

private:
    DenseIndex() = default;

    std::uint32_t dim_ = 0;
    std::uint32_t partitions_ = 1;
    std::vector<float> vectors_;
    IdMap ids_;
};

struct AnnBuildParams {
    std::uint32_t max_degree = 32;        // R
    std::uint32_t ef_construction = 200;  // beam width during insertion
};

struct AnnSearchResult {
    std::vector<DenseHit> hits;
    std::size_t visited = 0;  // nodes whose distance was computed
};

/// Navigable proximity graph built by greedy insertion: nodes enter in id
/// order, each links to its max_degree nearest earlier nodes found by beam
/// search, and reverse edges are added with the degree capped by pruning the
/// farthest neighbor. Connectivity from the entry point is verified (and
/// repaired) at build time.
class AnnGraph {
public:
    static AnnGraph build(const DenseIndex& index, const AnnBuildParams& params = {});

    /// Best-first traversal with an expansion window: a candidate is expanded
    /// while its distance stays within (1 + eps) times the current k-th best
    /// distance, distance being 1 - dot on unit vectors. Larger eps widens
    /// the visited set and raises recall at the cost of latency.
    AnnSearchResult search(const DenseIndex& index, std::span<const float> query, std::size_t k,
                           double eps) const;

    std::uint32_t max_degree() const { return max_degree_; }
    InternalId entry_point() const { return entry_; }
    std::size_t size() const { return adjacency_.size(); }
    const std::vector<InternalId>& neighbors(InternalId node) const {
        return adjacency_[node];
    }

    /// True when every node is reachable from the entry point.
    bool is_connected() const;

    /// Graph file: magic "CORTANN1", u32 R, then one length-prefixed u32
    /// neighbor list per node. The entry point is always node 0.
    void save(const std::string& path) const;
    static AnnGraph load(const std::string& path);

private:
    AnnGraph() = default;

    std::uint32_t max_degree_ = 0;
    InternalId entry_ = 0;
    std::vector<std::vector<InternalId>> adjacency_;
};

/// Bytes needed for `count` vectors of `e` float32 components: count * e * 4.
/// Throws on overflow and on e = 0.
std::uint64_t estimate_index_size(std::uint64_t count, std::uint64_t e);

}  // namespace cort
