#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cort/types.hpp"

namespace cort {

/// Passage collection with internal ids assigned in file order.
struct Corpus {
    IdMap ids;
    std::vector<std::string> texts;  // texts[internal id]

    std::size_t size() const { return texts.size(); }
};

/// Sparse relevance labels keyed by external ids. An absent pair means
/// grade 0: unlabeled passages are assumed to be negative.
class Qrels {
public:
    void add(const std::string& query_id, const std::string& doc_id, int grade);

    int grade(const std::string& query_id, const std::string& doc_id) const;

    bool has_query(const std::string& query_id) const { return entries_.count(query_id) > 0; }

    /// Docs labeled with grade >= min_grade for one query; empty if unknown query.
    std::vector<std::string> relevant_docs(const std::string& query_id, int min_grade = 1) const;

    const std::unordered_map<std::string, int>* docs_for(const std::string& query_id) const;

    std::size_t entry_count() const { return entry_count_; }
    std::size_t query_count() const { return entries_.size(); }

    /// Query ids in lexicographic order, for deterministic iteration.
    std::vector<std::string> query_ids_sorted() const;

private:
    std::unordered_map<std::string, std::unordered_map<std::string, int>> entries_;
    std::size_t entry_count_ = 0;
};

enum class StoreKind { kPassage, kQuery };

/// Fixed-size context vectors from an external encoder, one row per passage
/// or query. Passage and query stores are kept separate: the two are produced
/// with different input markings upstream and are not interchangeable.
struct ContextEmbeddingStore {
    std::uint32_t dim = 0;
    std::vector<float> rows;  // count x dim, row-major
    IdMap ids;
    StoreKind kind = StoreKind::kPassage;

    std::size_t count() const { return dim == 0 ? 0 : rows.size() / dim; }

    const float* row(std::size_t i) const { return rows.data() + i * dim; }

    std::optional<std::size_t> row_of(const std::string& external_id) const {
        InternalId id = ids.find(external_id);
        if (id == kInvalidId) return std::nullopt;
        return static_cast<std::size_t>(id);
    }
};

/// Reads a `id<TAB>text` TSV. Rejects duplicate ids, lines without a tab and
/// texts that are empty after whitespace trimming, naming the offending line.
Corpus load_corpus(const std::string& path);

/// Reads `qid 0 pid grade` lines (tabs or spaces). Grades must be in 0..=3.
/// Ids unknown to any corpus are retained; evaluation joins lazily.
Qrels load_qrels(const std::string& path);

/// Binary embedding file: magic "CORTEMB1", u32 count, u32 dim, then
/// count x dim float32 little-endian rows. The sidecar id file has one
/// external id per line, line i matching row i.
ContextEmbeddingStore load_embeddings(const std::string& vec_path, const std::string& id_path,
                                      StoreKind kind);

void write_embeddings(const std::string& vec_path, const std::string& id_path,
                      const ContextEmbeddingStore& store);

/// Writes a corpus (or query set) back to `id<TAB>text` TSV with LF endings.
void write_corpus(const std::string& path, const Corpus& corpus);

}  // namespace cort
