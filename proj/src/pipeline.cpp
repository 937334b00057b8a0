#include "cort/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cort/dense_index.hpp"
#include "cort/encoder.hpp"
#include "cort/eval.hpp"
#include "cort/fusion.hpp"
#include "cort/reranksim.hpp"

namespace cort {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<Ranking> bm25_run(const InvertedIndex& index, const Corpus& queries, std::size_t k) {
    std::vector<Ranking> run;
    run.reserve(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        run.push_back(index.search(queries.ids.external(static_cast<InternalId>(q)),
                                   queries.texts[q], k));
    }
    return run;
}

json metric_json(const MetricReport& report) {
    json out;
    for (const auto& [metric, by_cut] : report.means) {
        for (const auto& [cut, value] : by_cut) {
            out[metric]["@" + std::to_string(cut)] = value;
        }
    }
    out["evaluated_queries"] = report.evaluated_queries;
    out["skipped_queries"] = report.skipped_queries;
    return out;
}

void write_metrics_tsv(const std::string& path, const MetricReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "metric\tcut\tmean\n";
    for (const auto& [metric, by_cut] : report.means) {
        for (const auto& [cut, value] : by_cut) {
            out << metric << '\t' << cut << '\t' << format_score(value) << '\n';
        }
    }
}

json study_json(const CandidateStudy& study) {
    json rows = json::array();
    for (const CandidateStudyRow& row : study.rows) {
        rows.push_back({{"x", row.x},
                        {"mrr10", row.mrr10},
                        {"recall20", row.recall20},
                        {"recall_all", row.recall_all}});
    }
    json out;
    out["rows"] = rows;
    if (study.saturation_x) {
        out["saturation_x"] = *study.saturation_x;
    } else {
        out["saturation_x"] = nullptr;
    }
    return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    fs::create_directories(config.out_dir);
    auto path = [&](const std::string& name) {
        return (fs::path(config.out_dir) / name).string();
    };

    // Data generation.
    SynthData data = generate_synthetic(config.synth);
    write_synthetic(data, config.out_dir);

    // Term index.
    InvertedIndex index = InvertedIndex::build(data.passages, config.bm25);
    index.save(path("bm25.idx"));

    // BM25 rankings: negative-sampling source over train queries, baseline
    // run over test queries.
    std::vector<Ranking> bm25_train =
        bm25_run(index, data.train_queries, config.train.pool_depth);
    write_run(path("run_bm25_train.trec"), bm25_train, "bm25");
    std::vector<Ranking> bm25_test = bm25_run(index, data.test_queries, config.search_k);
    write_run(path("run_bm25_test.trec"), bm25_test, "bm25");

    // Head training on BM25-sampled negatives.
    ProjectionHead head = ProjectionHead::init_random(config.synth.context_dim, config.repr_dim,
                                                      config.train.seed);
    TrainResult trained = train(head, data.train_query_context, data.passage_context,
                                data.train_qrels, bm25_train, config.train);
    head.save(path("head.bin"));

    // Encoding and dense indexing.
    ContextEmbeddingStore passage_repr = encode_store(head, data.passage_context);
    write_embeddings(path("passages.repr"), path("passages.repr.ids"), passage_repr);
    DenseIndex dense = DenseIndex::build(passage_repr, config.partitions);
    dense.save(path("dense.idx"), path("dense.idx.ids"));

    // Dense retrieval over test queries.
    ContextEmbeddingStore test_repr = encode_store(head, data.test_query_context);
    std::vector<Ranking> cort_test;
    cort_test.reserve(test_repr.count());
    for (std::size_t q = 0; q < test_repr.count(); ++q) {
        cort_test.push_back(dense.search_ranking(
            test_repr.ids.external(static_cast<InternalId>(q)),
            std::span<const float>(test_repr.row(q), test_repr.dim), config.search_k));
    }
    write_run(path("run_cort_test.trec"), cort_test, "cort");

    // Fusion, dense side first.
    std::vector<Ranking> fused_test;
    fused_test.reserve(cort_test.size());
    for (std::size_t q = 0; q < cort_test.size(); ++q) {
        fused_test.push_back(zip_merge(cort_test[q], bm25_test[q], config.search_k));
    }
    write_run(path("run_fused_test.trec"), fused_test, "fused");

    // Evaluation.
    MetricReport bm25_report = evaluate(bm25_test, data.test_qrels, config.eval_cuts);
    MetricReport cort_report = evaluate(cort_test, data.test_qrels, config.eval_cuts);
    MetricReport fused_report = evaluate(fused_test, data.test_qrels, config.eval_cuts);
    write_metrics_tsv(path("metrics_bm25.tsv"), bm25_report);
    write_metrics_tsv(path("metrics_cort.tsv"), cort_report);
    write_metrics_tsv(path("metrics_fused.tsv"), fused_report);

    // Oracle candidate study: how many candidates until re-ranking saturates.
    FeatureExtractor no_features = [](const std::string&, const RankedDoc&) {
        return FeatureVector{};
    };
    CandidateStudy bm25_study =
        candidate_study(bm25_test, data.test_qrels, config.study_x, nullptr, no_features);
    CandidateStudy fused_study =
        candidate_study(fused_test, data.test_qrels, config.study_x, nullptr, no_features);

    std::ofstream study_out(path("study.tsv"), std::ios::binary);
    study_out << "source\tx\tmrr10\trecall20\trecall_all\n";
    for (const auto* pair : {&bm25_study, &fused_study}) {
        const char* name = pair == &bm25_study ? "bm25" : "fused";
        for (const CandidateStudyRow& row : pair->rows) {
            study_out << name << '\t' << row.x << '\t' << format_score(row.mrr10) << '\t'
                      << format_score(row.recall20) << '\t' << format_score(row.recall_all)
                      << '\n';
        }
    }
    study_out.close();

    PipelineResult result;
    result.train_epoch_losses = trained.epoch_losses;
    result.bm25_recall50 = bm25_report.means.at("recall").at(50);
    result.cort_recall50 = cort_report.means.at("recall").at(50);
    result.fused_recall50 = fused_report.means.at("recall").at(50);
    result.bm25_recall_at_k = bm25_report.means.at("recall").at(config.search_k);
    result.fused_recall_at_k = fused_report.means.at("recall").at(config.search_k);
    result.bm25_saturation_x = bm25_study.saturation_x;
    result.fused_saturation_x = fused_study.saturation_x;

    json report;
    report["config"] = {{"n_docs", config.synth.n_docs},
                        {"n_train_queries", config.synth.n_train_queries},
                        {"n_test_queries", config.synth.n_test_queries},
                        {"mismatch_fraction", config.synth.mismatch_fraction},
                        {"context_dim", config.synth.context_dim},
                        {"repr_dim", config.repr_dim},
                        {"partitions", config.partitions},
                        {"search_k", config.search_k},
                        {"seed", config.synth.seed}};
    report["train"] = {{"epoch_losses", trained.epoch_losses},
                       {"optimizer_steps", trained.optimizer_steps},
                       {"triples_seen", trained.triples_seen},
                       {"skipped_queries", trained.skipped_queries}};
    report["metrics"] = {{"bm25", metric_json(bm25_report)},
                         {"cort", metric_json(cort_report)},
                         {"fused", metric_json(fused_report)}};
    report["study"] = {{"bm25", study_json(bm25_study)}, {"fused", study_json(fused_study)}};

    result.report_path = path("report.json");
    std::ofstream report_out(result.report_path, std::ios::binary);
    report_out << report.dump(2) << '\n';

    return result;
}

}  // namespace cort
