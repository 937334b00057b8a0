#include "cort/fusion.hpp"

#include <stdexcept>
#include <unordered_set>

namespace cort {

Ranking zip_merge(const Ranking& primary, const Ranking& secondary, std::size_t k) {
    if (k < 1) throw std::invalid_argument("fused ranking size must be >= 1");

    Ranking fused;
    fused.query_id = primary.query_id.empty() ? secondary.query_id : primary.query_id;
    fused.source = RankSource::kFused;

    std::unordered_set<std::string> emitted;
    std::size_t pa = 0;
    std::size_t pb = 0;
    bool primary_turn = true;

    while (fused.items.size() < k && (pa < primary.items.size() || pb < secondary.items.size())) {
        const Ranking* src;
        std::size_t* cursor;
        bool take_primary = primary_turn ? pa < primary.items.size()
                                         : pb >= secondary.items.size();
        if (take_primary) {
            src = &primary;
            cursor = &pa;
        } else {
            src = &secondary;
            cursor = &pb;
        }
        const std::string& doc = src->items[*cursor].doc_id;
        ++*cursor;
        if (emitted.insert(doc).second) {
            fused.items.push_back({doc, 1.0 / static_cast<double>(fused.items.size() + 1)});
        }
        primary_turn = !primary_turn;
    }
    return fused;
}

}  // namespace cort
