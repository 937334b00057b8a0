#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cort/bm25.hpp"
#include "cort/corpus.hpp"
#include "cort/dense_index.hpp"
#include "cort/encoder.hpp"

namespace cort {

struct LatencyStats {
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    std::size_t samples = 0;
};

struct BenchRow {
    std::string mode;        // "bm25", "exhaustive(P)", "ann(eps=...)"
    std::string phase;       // "encoding" or "retrieval"
    std::size_t batch_size = 1;
    LatencyStats stats;
};

struct BenchConfig {
    std::size_t k = 1000;
    std::vector<std::size_t> batch_sizes = {1, 32};
    std::size_t repetitions = 3;
    std::size_t warmup_queries = 8;
    std::vector<double> ann_eps = {0.01, 0.1, 0.4};
    unsigned threads = 1;  // worker count for batch fan-out and partition scans
};

struct BenchInputs {
    const InvertedIndex* bm25 = nullptr;            // may be null to skip bm25 rows
    const Corpus* queries = nullptr;                // texts, for bm25
    const ProjectionHead* head = nullptr;           // for encoding rows
    const ContextEmbeddingStore* query_context = nullptr;
    const DenseIndex* dense = nullptr;              // for exhaustive rows
    const AnnGraph* ann = nullptr;                  // for ann rows
};

/// Measures per-query latency per mode and batch size. Timed regions cover
/// pure computation: tokenize+score for bm25, head projection + normalize
/// for the encoding rows, index scans/traversal for the retrieval rows.
/// File IO and index loading happen outside the clock.
std::vector<BenchRow> run_bench(const BenchInputs& inputs, const BenchConfig& config);

/// TSV rendering of the report (mode, phase, batch, mean, median, p95, n).
std::string bench_report_tsv(const std::vector<BenchRow>& rows);

}  // namespace cort
