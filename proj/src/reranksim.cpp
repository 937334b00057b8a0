#include "cort/reranksim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cort/eval.hpp"
#include "cort/rng.hpp"

namespace cort {

namespace {

constexpr double kConfidenceFloor = 1e-7;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double LogisticReranker::confidence(const FeatureVector& features) const {
    if (features.size() != weights.size()) {
        throw std::invalid_argument("feature vector length does not match model");
    }
    double logit = bias;
    for (std::size_t i = 0; i < features.size(); ++i) logit += weights[i] * features[i];
    return sigmoid(logit);
}

double bce_loss(double confidence, int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
    double z = std::clamp(confidence, kConfidenceFloor, 1.0 - kConfidenceFloor);
    return -(label * std::log(z) + (1 - label) * std::log(1.0 - z));
}

RerankTrainResult train_reranker(const std::vector<FeatureVector>& features,
                                 const std::vector<int>& labels,
                                 const RerankTrainConfig& config) {
    if (features.size() != labels.size()) {
        throw std::invalid_argument("features and labels differ in length");
    }
    if (features.empty()) throw std::invalid_argument("no training pairs");
    const std::size_t dim = features.front().size();

    RerankTrainResult result;
    result.model.weights.assign(dim, 0.0);
    result.model.bias = 0.0;

    bool has_pos = false, has_neg = false;
    for (int y : labels) (y == 1 ? has_pos : has_neg) = true;
    result.degenerate_labels = !(has_pos && has_neg);

    const double n = static_cast<double>(features.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<double> grad_w(dim, 0.0);
        double grad_b = 0.0;
        double loss = 0.0;
        for (std::size_t i = 0; i < features.size(); ++i) {
            double z = result.model.confidence(features[i]);
            loss += bce_loss(z, labels[i]);
            double dlogit = z - labels[i];  // d(BCE)/d(logit)
            for (std::size_t d = 0; d < dim; ++d) grad_w[d] += dlogit * features[i][d];
            grad_b += dlogit;
        }
        result.loss_trace.push_back(loss / n);
        for (std::size_t d = 0; d < dim; ++d) {
            result.model.weights[d] -= config.learning_rate * grad_w[d] / n;
        }
        result.model.bias -= config.learning_rate * grad_b / n;
    }
    return result;
}

void collect_training_pairs(const std::vector<Ranking>& candidates, const Qrels& qrels,
                            const FeatureExtractor& extract, const RerankTrainConfig& config,
                            std::vector<FeatureVector>& features, std::vector<int>& labels) {
    Rng rng(config.seed);
    for (const Ranking& ranking : candidates) {
        std::size_t depth = std::min(config.candidate_depth, ranking.items.size());
        std::vector<std::size_t> negatives;
        bool any_positive = false;
        for (std::size_t i = 0; i < depth; ++i) {
            const RankedDoc& item = ranking.items[i];
            if (qrels.grade(ranking.query_id, item.doc_id) >= 1) {
                features.push_back(extract(ranking.query_id, item));
                labels.push_back(1);
                any_positive = true;
            } else {
                negatives.push_back(i);
            }
        }
        if (!any_positive || negatives.empty()) continue;
        std::size_t draws = std::min(config.negatives_per_query, negatives.size());
        for (std::size_t d = 0; d < draws; ++d) {
            std::size_t pick = negatives[static_cast<std::size_t>(rng.bounded(negatives.size()))];
            features.push_back(extract(ranking.query_id, ranking.items[pick]));
            labels.push_back(0);
        }
    }
}

Ranking rerank(const LogisticReranker& model, const FeatureExtractor& extract,
               const Ranking& candidates, std::size_t k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    struct Scored {
        std::size_t original;
        double confidence;
    };
    std::vector<Scored> scored;
    scored.reserve(candidates.items.size());
    for (std::size_t i = 0; i < candidates.items.size(); ++i) {
        scored.push_back({i, model.confidence(extract(candidates.query_id, candidates.items[i]))});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        return a.confidence > b.confidence;  // stable: ties keep original order
    });

    Ranking out;
    out.query_id = candidates.query_id;
    out.source = candidates.source;
    std::size_t depth = std::min(k, scored.size());
    for (std::size_t i = 0; i < depth; ++i) {
        out.items.push_back({candidates.items[scored[i].original].doc_id, scored[i].confidence});
    }
    return out;
}

Ranking rerank_oracle(const Ranking& candidates, const Qrels& qrels, std::size_t k,
                      int binarize_grade) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    struct Entry {
        std::size_t original;
        int grade;
    };
    std::vector<Entry> entries;
    entries.reserve(candidates.items.size());
    for (std::size_t i = 0; i < candidates.items.size(); ++i) {
        int grade = qrels.grade(candidates.query_id, candidates.items[i].doc_id);
        entries.push_back({i, grade >= binarize_grade ? grade : 0});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.grade > b.grade; });

    Ranking out;
    out.query_id = candidates.query_id;
    out.source = candidates.source;
    std::size_t depth = std::min(k, entries.size());
    for (std::size_t i = 0; i < depth; ++i) {
        out.items.push_back({candidates.items[entries[i].original].doc_id,
                             1.0 / static_cast<double>(i + 1)});
    }
    return out;
}

CandidateStudy candidate_study(const std::vector<Ranking>& first_stage, const Qrels& qrels,
                               const std::vector<std::size_t>& x_values,
                               const LogisticReranker* model, const FeatureExtractor& extract,
                               int binarize_grade) {
    CandidateStudy study;
    for (std::size_t x : x_values) {
        std::vector<Ranking> reranked;
        std::vector<Ranking> truncated;
        reranked.reserve(first_stage.size());
        truncated.reserve(first_stage.size());
        for (const Ranking& ranking : first_stage) {
            Ranking top_x;
            top_x.query_id = ranking.query_id;
            top_x.source = ranking.source;
            std::size_t depth = std::min(x, ranking.items.size());
            top_x.items.assign(ranking.items.begin(),
                               ranking.items.begin() + static_cast<std::ptrdiff_t>(depth));
            if (model == nullptr) {
                reranked.push_back(rerank_oracle(top_x, qrels, x, binarize_grade));
            } else {
                reranked.push_back(rerank(*model, extract, top_x, x));
            }
            truncated.push_back(std::move(top_x));
        }

        CandidateStudyRow row;
        row.x = x;
        double mrr_sum = 0.0;
        double recall20_sum = 0.0, recall_all_sum = 0.0;
        std::size_t mrr_n = 0, recall20_n = 0, recall_all_n = 0;
        for (std::size_t i = 0; i < reranked.size(); ++i) {
            if (!qrels.has_query(reranked[i].query_id)) continue;
            mrr_sum += mrr_at(reranked[i], qrels, 10, binarize_grade);
            ++mrr_n;
            if (auto r = recall_at(reranked[i], qrels, 20, binarize_grade)) {
                recall20_sum += *r;
                ++recall20_n;
            }
            // Recall within all supplied candidates: the re-ranker cannot add
            // documents, so this equals the first-stage recall at depth x.
            if (auto r = recall_at(truncated[i], qrels, x, binarize_grade)) {
                recall_all_sum += *r;
                ++recall_all_n;
            }
        }
        row.mrr10 = mrr_n ? mrr_sum / mrr_n : 0.0;
        row.recall20 = recall20_n ? recall20_sum / recall20_n : 0.0;
        row.recall_all = recall_all_n ? recall_all_sum / recall_all_n : 0.0;
        study.rows.push_back(row);
    }

    std::vector<std::pair<double, double>> series;
    for (const CandidateStudyRow& row : study.rows) {
        series.emplace_back(static_cast<double>(row.x), row.mrr10);
    }
    if (series.size() >= 2) {
        study.saturation_x = saturation_point(series);
    }
    return study;
}

}  // namespace cort
