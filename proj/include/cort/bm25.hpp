#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cort/corpus.hpp"
#include "cort/types.hpp"

namespace cort {

struct Bm25Params {
    // Anserini's MS-MARCO-tuned defaults. Lucene ships k1=0.9, b=0.4.
    float k1 = 0.82f;
    float b = 0.68f;
    bool remove_stopwords = false;
    bool stem = false;
};

struct Posting {
    InternalId doc = 0;
    std::uint32_t tf = 0;
};

/// Term-based first-stage ranker over an in-memory inverted index.
///
/// score(q, d) = sum over query terms t of
///   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
/// with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), which stays positive.
class InvertedIndex {
public:
    /// Builds from a corpus. Rejects a corpus whose documents all tokenize
    /// to empty streams.
    static InvertedIndex build(const Corpus& corpus, const Bm25Params& params = {});

    /// Top-k search. Ties break toward the smaller internal doc id; a query
    /// with no indexed terms yields an empty ranking.
    Ranking search(const std::string& query_id, const std::string& query_text,
                   std::size_t k) const;

    /// Scores every document sharing at least one term with the query.
    /// Used by search and exposed for rank-depth studies.
    std::vector<std::pair<InternalId, double>> score_all(const std::string& query_text) const;

    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avg_doc_len() const { return avg_doc_len_; }
    const Bm25Params& params() const { return params_; }
    const IdMap& ids() const { return ids_; }

    const std::vector<Posting>* postings(const std::string& term) const {
        auto it = postings_.find(term);
        return it == postings_.end() ? nullptr : &it->second;
    }

    double idf(std::size_t df) const;

private:
    InvertedIndex() = default;

    Bm25Params params_;
    IdMap ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_len_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

/// Minimal stopword list applied when Bm25Params::remove_stopwords is set.
const std::unordered_set<std::string>& english_stopwords();

/// Terms after the configured analysis chain (stopwording, stemming).
std::vector<std::string> analyze(const std::string& text, const Bm25Params& params);

}  // namespace cort
