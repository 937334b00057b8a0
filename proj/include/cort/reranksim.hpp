#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cort/corpus.hpp"
#include "cort/types.hpp"

namespace cort {

/// Engineered features for one (query, passage) candidate, standing in for a
/// heavyweight cross-attention scorer: [bm25 score, dense dot product,
/// term-overlap ratio, log passage length] by default.
using FeatureVector = std::vector<double>;

/// Produces the feature vector for a candidate at its original rank.
using FeatureExtractor =
    std::function<FeatureVector(const std::string& query_id, const RankedDoc& candidate)>;

/// Point-wise re-ranker: confidence(x) = sigmoid(w . x + b).
struct LogisticReranker {
    std::vector<double> weights;
    double bias = 0.0;

    double confidence(const FeatureVector& features) const;
};

/// Binary cross-entropy -[y ln(z) + (1 - y) ln(1 - z)]; the confidence is
/// clamped to [1e-7, 1 - 1e-7] so the endpoints stay finite.
double bce_loss(double confidence, int label);

struct RerankTrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 200;
    std::uint64_t seed = 7;
    std::size_t negatives_per_query = 4;  // random draws from the candidate list
    std::size_t candidate_depth = 1000;   // negatives come from the top-1000 candidates
};

struct RerankTrainResult {
    LogisticReranker model;
    std::vector<double> loss_trace;  // mean BCE per epoch
    bool degenerate_labels = false;  // all labels were one class
};

/// Full-batch gradient descent on mean BCE over the given labeled pairs.
RerankTrainResult train_reranker(const std::vector<FeatureVector>& features,
                                 const std::vector<int>& labels,
                                 const RerankTrainConfig& config);

/// Builds a labeled training set from first-stage candidate lists: every
/// positively labeled candidate pairs with random negatives drawn from the
/// same query's (top-`candidate_depth`) candidates.
void collect_training_pairs(const std::vector<Ranking>& candidates, const Qrels& qrels,
                            const FeatureExtractor& extract, const RerankTrainConfig& config,
                            std::vector<FeatureVector>& features, std::vector<int>& labels);

/// Reorders the top-k candidates by descending model confidence; ties keep
/// the original candidate order.
Ranking rerank(const LogisticReranker& model, const FeatureExtractor& extract,
               const Ranking& candidates, std::size_t k);

/// Upper-bound re-ranker that consults the labels directly: relevant
/// candidates first (higher grades first), original order within ties.
Ranking rerank_oracle(const Ranking& candidates, const Qrels& qrels, std::size_t k,
                      int binarize_grade = 1);

struct CandidateStudyRow {
    std::size_t x = 0;  // candidates given to the re-ranker
    double mrr10 = 0.0;
    double recall20 = 0.0;
    double recall_all = 0.0;  // recall within the x candidates themselves
};

struct CandidateStudy {
    std::vector<CandidateStudyRow> rows;
    std::optional<double> saturation_x;  // from the MRR@10 column
};

/// Re-ranks the top-x candidates for each x and evaluates the result. The
/// re-ranker is either the oracle (model == nullptr) or a trained model.
CandidateStudy candidate_study(const std::vector<Ranking>& first_stage, const Qrels& qrels,
                               const std::vector<std::size_t>& x_values,
                               const LogisticReranker* model, const FeatureExtractor& extract,
                               int binarize_grade = 1);

}  // namespace cort
