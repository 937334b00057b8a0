#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cort/corpus.hpp"

namespace cort {

/// Controls for the generated vocabulary-mismatch corpus.
///
/// Every query carries a unique anchor term plus two topic terms. Its single
/// relevant passage either repeats those terms (term-match case) or uses
/// only their synonym twins (mismatch case, invisible to term matching),
/// while the context embeddings place query and relevant passage next to
/// each other either way. Confounder passages recycle query terms with high
/// frequency but live near other topics in context space, which pushes the
/// relevant passages down the term-based ranking and populates the negative
/// pools.
struct SynthConfig {
    std::size_t n_docs = 10000;
    std::size_t n_train_queries = 500;
    std::size_t n_test_queries = 200;
    std::size_t n_topics = 64;
    double mismatch_fraction = 0.4;
    std::size_t confounds_per_query = 6;
    std::uint32_t context_dim = 32;
    std::size_t style_dims = 8;    // trailing nuisance dimensions
    double signal_alpha = 0.8;     // per-query direction shared with the relevant passage
    double noise_sigma = 0.35;
    double style_sigma = 1.2;
    std::uint64_t seed = 42;

    /// Optional word -> synonym mapping; generated twins are used for words
    /// not covered by the table.
    std::unordered_map<std::string, std::string> synonyms;
};

struct SynthData {
    Corpus passages;
    Corpus train_queries;
    Corpus test_queries;
    Qrels train_qrels;
    Qrels test_qrels;
    ContextEmbeddingStore passage_context;
    ContextEmbeddingStore train_query_context;
    ContextEmbeddingStore test_query_context;
    // Query ids whose relevant passage shares no term with the query.
    std::vector<std::string> mismatch_train_queries;
    std::vector<std::string> mismatch_test_queries;
};

/// Deterministic for a given config (identical seeds give identical bytes
/// once written).
SynthData generate_synthetic(const SynthConfig& config);

/// Writes corpus.tsv, queries_{train,test}.tsv, qrels_{train,test}.tsv and
/// the three context stores (ctx_*.emb / ctx_*.ids) into `dir`.
void write_synthetic(const SynthData& data, const std::string& dir);

}  // namespace cort
