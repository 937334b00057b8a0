#include "cort/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cort/eval.hpp"

namespace cort {

namespace {

using Clock = std::chrono::steady_clock;

std::atomic<std::size_t> g_sink{0};  // keeps the optimizer honest

LatencyStats summarize(std::vector<double>& samples_ms) {
    LatencyStats stats;
    stats.samples = samples_ms.size();
    if (samples_ms.empty()) return stats;
    double sum = 0.0;
    for (double s : samples_ms) sum += s;
    stats.mean_ms = sum / static_cast<double>(samples_ms.size());
    std::sort(samples_ms.begin(), samples_ms.end());
    stats.median_ms = samples_ms[samples_ms.size() / 2];
    std::size_t p95 = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(samples_ms.size()) - 1.0,
                         std::ceil(0.95 * static_cast<double>(samples_ms.size())) - 1.0));
    stats.p95_ms = samples_ms[p95];
    return stats;
}

// Runs `op(query_index)` over all queries in batches, timing each batch and
// recording per-query latency = batch time / batch size.
LatencyStats measure(const std::function<void(std::size_t)>& op, std::size_t n_queries,
                     std::size_t batch_size, const BenchConfig& cfg) {
    for (std::size_t w = 0; w < std::min(cfg.warmup_queries, n_queries); ++w) op(w);

    std::vector<double> samples_ms;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        for (std::size_t start = 0; start < n_queries; start += batch_size) {
            std::size_t end = std::min(n_queries, start + batch_size);
            auto t0 = Clock::now();
            if (cfg.threads > 1 && end - start > 1) {
                unsigned workers = std::min<unsigned>(cfg.threads,
                                                      static_cast<unsigned>(end - start));
                std::vector<std::thread> pool;
                for (unsigned w = 0; w < workers; ++w) {
                    pool.emplace_back([&, w]() {
                        for (std::size_t q = start + w; q < end; q += workers) op(q);
                    });
                }
                for (auto& t : pool) t.join();
            } else {
                for (std::size_t q = start; q < end; ++q) op(q);
            }
            auto t1 = Clock::now();
            double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            samples_ms.push_back(ms / static_cast<double>(end - start));
        }
    }
    return summarize(samples_ms);
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchInputs& inputs, const BenchConfig& cfg) {
    if (cfg.repetitions == 0) throw std::invalid_argument("repetitions must be >= 1");

    std::vector<BenchRow> rows;

    std::size_t n_queries = 0;
    if (inputs.queries != nullptr) n_queries = inputs.queries->size();
    if (inputs.query_context != nullptr) {
        n_queries = n_queries == 0 ? inputs.query_context->count()
                                   : std::min(n_queries, inputs.query_context->count());
    }
    if (n_queries == 0) throw std::invalid_argument("empty query set");

    auto add_rows = [&](const std::string& mode, const std::string& phase,
                        const std::function<void(std::size_t)>& op) {
        for (std::size_t batch : cfg.batch_sizes) {
            BenchRow row;
            row.mode = mode;
            row.phase = phase;
            row.batch_size = batch;
            row.stats = measure(op, n_queries, batch, cfg);
            rows.push_back(std::move(row));
        }
    };

    if (inputs.bm25 != nullptr && inputs.queries != nullptr) {
        const InvertedIndex& index = *inputs.bm25;
        const Corpus& queries = *inputs.queries;
        add_rows("bm25", "retrieval", [&](std::size_t q) {
            Ranking r = index.search(queries.ids.external(static_cast<InternalId>(q)),
                                     queries.texts[q], cfg.k);
            g_sink += r.items.size();
        });
    }

    bool can_encode = inputs.head != nullptr && inputs.query_context != nullptr;
    if (can_encode) {
        const ProjectionHead& head = *inputs.head;
        const ContextEmbeddingStore& ctx = *inputs.query_context;
        add_rows("query-encoding", "encoding", [&](std::size_t q) {
            std::vector<float> repr =
                encode_one(head, std::span<const float>(ctx.row(q), ctx.dim));
            g_sink += repr.size();
        });
    }

    // Retrieval rows run over pre-encoded representations so the clock covers
    // only the index work; encoding cost is reported separately above.
    std::vector<std::vector<float>> encoded;
    if (can_encode && (inputs.dense != nullptr || inputs.ann != nullptr)) {
        encoded.reserve(n_queries);
        for (std::size_t q = 0; q < n_queries; ++q) {
            encoded.push_back(encode_one(
                *inputs.head, std::span<const float>(inputs.query_context->row(q),
                                                     inputs.query_context->dim)));
        }
    }

    if (inputs.dense != nullptr && !encoded.empty()) {
        const DenseIndex& dense = *inputs.dense;
        std::string mode = "exhaustive(P=" + std::to_string(dense.partitions()) + ")";
        add_rows(mode, "retrieval", [&](std::size_t q) {
            auto hits = dense.search(encoded[q], cfg.k);
            g_sink += hits.size();
        });
    }

    if (inputs.ann != nullptr && inputs.dense != nullptr && !encoded.empty()) {
        for (double eps : cfg.ann_eps) {
            std::ostringstream name;
            name << "ann(eps=" << eps << ")";
            add_rows(name.str(), "retrieval", [&, eps](std::size_t q) {
                AnnSearchResult r = inputs.ann->search(*inputs.dense, encoded[q], cfg.k, eps);
                g_sink += r.visited;
            });
        }
    }

    return rows;
}

std::string bench_report_tsv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "mode\tphase\tbatch\tmean_ms\tmedian_ms\tp95_ms\tsamples\n";
    for (const BenchRow& row : rows) {
        out << row.mode << '\t' << row.phase << '\t' << row.batch_size << '\t'
            << format_score(row.stats.mean_ms) << '\t' << format_score(row.stats.median_ms)
            << '\t' << format_score(row.stats.p95_ms) << '\t' << row.stats.samples << '\n';
    }
    return out.str();
}

}  // namespace cort
