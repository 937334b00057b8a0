#pragma once

#include <cstddef>

#include "cort/types.hpp"

namespace cort {

/// Compound ranking by zipping positions, starting with the primary list:
/// positions alternate primary/secondary, a document already emitted is
/// skipped (its turn advances that source's cursor), and merging stops once
/// k documents are emitted or both inputs are exhausted. When one list runs
/// out the remaining positions come from the other. Merging [a,b,c,d] with
/// [e,c,f,a] at k=6 gives [a,e,b,c,f,d].
///
/// Fused scores are synthetic (1 / position): fusion is positional, but run
/// files need descending scores.
Ranking zip_merge(const Ranking& primary, const Ranking& secondary, std::size_t k);

}  // namespace cort
