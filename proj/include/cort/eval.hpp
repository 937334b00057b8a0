#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cort/corpus.hpp"
#include "cort/types.hpp"

namespace cort {

/// Reciprocal rank of the first document with grade >= binarize_grade within
/// the top k, or 0 when none is there.
double mrr_at(const Ranking& ranking, const Qrels& qrels, std::size_t k, int binarize_grade = 1);

/// Graded nDCG: gain = grade, discount 1/log2(rank + 1), normalized by the
/// ideal DCG computed from the qrels. A query with no graded documents
/// evaluates to 0.
double ndcg_at(const Ranking& ranking, const Qrels& qrels, std::size_t k);

/// |relevant in top-k| / |relevant|. nullopt when the query has no relevant
/// documents (such queries are excluded from mean recall).
std::optional<double> recall_at(const Ranking& ranking, const Qrels& qrels, std::size_t k,
                                int binarize_grade = 1);

/// Average precision within the top k; the denominator is the total number
/// of relevant documents. nullopt when the query has none.
std::optional<double> map_at(const Ranking& ranking, const Qrels& qrels, std::size_t k,
                             int binarize_grade = 1);

/// Smallest x in a (x, value) series of successive doublings where doubling
/// stops paying: value(2x) < 1.005 * value(x). nullopt when the series keeps
/// improving by at least 0.5% per doubling. Needs at least two points.
std::optional<double> saturation_point(const std::vector<std::pair<double, double>>& series);

struct MetricReport {
    std::vector<std::size_t> cuts;
    // metric name -> cut -> mean value over evaluated queries
    std::map<std::string, std::map<std::size_t, double>> means;
    // metric name -> cut -> per-query values (query id, value)
    std::map<std::string, std::map<std::size_t, std::vector<std::pair<std::string, double>>>>
        per_query;
    std::size_t evaluated_queries = 0;
    std::size_t skipped_queries = 0;  // queries absent from the qrels
};

/// Evaluates a run at each cut. Queries without qrels entries are skipped
/// and counted; queries with entries but no relevant document contribute to
/// MRR/NDCG and are excluded from Recall/MAP means.
MetricReport evaluate(const std::vector<Ranking>& run, const Qrels& qrels,
                      const std::vector<std::size_t>& cuts, int binarize_grade = 1);

/// TREC run file line: `qid Q0 docid rank score tag`. The writer emits ranks
/// from 1 with non-increasing scores. The reader groups lines by query and
/// re-sorts on (score desc, docid asc) when the input is out of order,
/// reporting that through `resorted`.
struct RunReadResult {
    std::vector<Ranking> rankings;
    bool resorted = false;
};

RunReadResult read_run(const std::string& path);
void write_run(const std::string& path, const std::vector<Ranking>& run,
               const std::string& tag);

/// Deterministic score formatting shared by every run/report writer.
std::string format_score(double value);

}  // namespace cort
