#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace cort {

/// Dense internal identifier. Internal ids are contiguous from 0 in load order.
using InternalId = std::uint32_t;

constexpr InternalId kInvalidId = static_cast<InternalId>(-1);

/// Bijective mapping between opaque external id strings (as they appear in
/// source files) and dense internal ids.
class IdMap {
public:
    IdMap() = default;

    /// Adds an external id and returns its internal id.
    /// Throws if the external id is already present.
    InternalId add(const std::string& external) {
        auto [it, inserted] = to_internal_.emplace(external, static_cast<InternalId>(externals_.size()));
        if (!inserted) {
            throw std::runtime_error("duplicate id " + external);
        }
        externals_.push_back(external);
        return it->second;
    }

    bool contains(const std::string& external) const {
        return to_internal_.count(external) > 0;
    }

    InternalId internal(const std::string& external) const {
        auto it = to_internal_.find(external);
        if (it == to_internal_.end()) {
            throw std::out_of_range("unknown id " + external);
        }
        return it->second;
    }

    /// Lookup that does not throw; returns kInvalidId when absent.
    InternalId find(const std::string& external) const {
        auto it = to_internal_.find(external);
        return it == to_internal_.end() ? kInvalidId : it->second;
    }

    const std::string& external(InternalId id) const { return externals_.at(id); }

    std::size_t size() const { return externals_.size(); }
    bool empty() const { return externals_.empty(); }

    const std::vector<std::string>& externals() const { return externals_; }

private:
    std::vector<std::string> externals_;
    std::unordered_map<std::string, InternalId> to_internal_;
};

/// Origin of a ranking; carried through fusion and run-file IO.
enum class RankSource { kBm25, kCort, kFused, kExternal };

inline const char* to_string(RankSource s) {
    switch (s) {
        case RankSource::kBm25: return "bm25";
        case RankSource::kCort: return "cort";
        case RankSource::kFused: return "fused";
        case RankSource::kExternal: return "external";
    }
    return "unknown";
}

struct RankedDoc {
    std::string doc_id;  // external id
    double score = 0.0;
};

/// Ordered candidate list for one query. The universal exchange value between
/// BM25, dense retrieval, fusion and evaluation. Items are duplicate-free and,
/// for single-source rankings, sorted by non-increasing score.
struct Ranking {
    std::string query_id;
    std::vector<RankedDoc> items;
    RankSource source = RankSource::kExternal;
};

}  // namespace cort
