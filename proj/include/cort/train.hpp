#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cort/corpus.hpp"
#include "cort/encoder.hpp"
#include "cort/rng.hpp"
#include "cort/types.hpp"

namespace cort {

struct TrainConfig {
    double margin = 0.1;
    std::size_t batch_size = 6;
    std::size_t accum_steps = 100;  // mini-batches whose mean gradient forms one update
    double learning_rate = 2e-6;
    std::size_t warmup_steps = 2000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-6;
    double weight_decay = 0.1;
    std::size_t epochs = 10;
    std::size_t pool_depth = 100;  // negatives come from the top-`pool_depth` BM25 ranks
    std::size_t filter_n = 8;      // the `filter_n` highest ranks are excluded
    std::uint64_t seed = 42;

    void validate() const;
};

/// Per-query negative candidate pools drawn from BM25 rankings.
///
/// The pool for a query is its BM25 ranking restricted to ranks
/// (filter_n, pool_depth], minus every positively labeled document. The top
/// ranks are excluded for their relatively high chance of being relevant
/// despite missing labels.
class NegativeSampler {
public:
    NegativeSampler(const Qrels& qrels, const std::vector<Ranking>& bm25_rankings,
                    std::size_t pool_depth, std::size_t filter_n);

    /// Uniform draw from the query's pool; nullopt when the pool is empty.
    std::optional<std::string> sample(const std::string& query_id, Rng& rng) const;

    const std::vector<std::string>* pool(const std::string& query_id) const;

    /// Queries whose pools came out empty (all candidates filtered).
    std::size_t skipped_queries() const { return skipped_; }

private:
    std::unordered_map<std::string, std::vector<std::string>> pools_;
    std::size_t skipped_ = 0;
};

/// One drawn negative per query, deterministic for a given seed. Queries with
/// exhausted pools are skipped and tallied in `skipped`.
struct NegativeSample {
    std::unordered_map<std::string, std::string> negatives;
    std::size_t skipped = 0;
};

NegativeSample sample_negatives(const Qrels& qrels, const std::vector<Ranking>& bm25_rankings,
                                std::size_t pool_depth, std::size_t filter_n, std::uint64_t seed);

struct TrainResult {
    std::vector<double> epoch_losses;  // mean mini-batch loss per epoch
    std::size_t optimizer_steps = 0;
    std::size_t triples_seen = 0;
    std::size_t skipped_queries = 0;  // no usable positive, embedding, or negative pool
};

/// Trains the head over frozen context vectors. Each epoch draws, for every
/// eligible query, one random positive and one BM25-sampled negative, then
/// walks mini-batches accumulating gradients; one optimizer update applies
/// the arithmetic mean of the accumulated gradients. Learning rate warms up
/// linearly and then decays linearly to zero. Single-threaded and bit-for-bit
/// reproducible for a fixed seed. Aborts when the loss stops being finite.
TrainResult train(ProjectionHead& head, const ContextEmbeddingStore& query_store,
                  const ContextEmbeddingStore& passage_store, const Qrels& qrels,
                  const std::vector<Ranking>& bm25_rankings, const TrainConfig& config);

}  // namespace cort
