// Command-line frontend: indexing, training, retrieval, fusion, evaluation,
// benchmarking and the synthetic end-to-end experiment.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cort/bench.hpp"
#include "cort/bm25.hpp"
#include "cort/config.hpp"
#include "cort/corpus.hpp"
#include "cort/dense_index.hpp"
#include "cort/encoder.hpp"
#include "cort/eval.hpp"
#include "cort/fusion.hpp"
#include "cort/pipeline.hpp"
#include "cort/reranksim.hpp"
#include "cort/synth.hpp"
#include "cort/tokenizer.hpp"
#include "cort/train.hpp"

namespace {

using nlohmann::json;

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(std::stoull(item));
    }
    if (out.empty()) throw CLI::ValidationError("expected a comma-separated list of integers");
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    if (out.empty()) throw CLI::ValidationError("expected a comma-separated list of numbers");
    return out;
}

cort::TrainConfig train_config_from(const cort::KeyValueConfig& kv) {
    cort::TrainConfig cfg;
    cfg.margin = kv.get("margin", cfg.margin);
    cfg.batch_size = kv.get("batch_size", static_cast<std::uint64_t>(cfg.batch_size));
    cfg.accum_steps = kv.get("accum_steps", static_cast<std::uint64_t>(cfg.accum_steps));
    cfg.learning_rate = kv.get("learning_rate", cfg.learning_rate);
    cfg.warmup_steps = kv.get("warmup_steps", static_cast<std::uint64_t>(cfg.warmup_steps));
    cfg.beta1 = kv.get("beta1", cfg.beta1);
    cfg.beta2 = kv.get("beta2", cfg.beta2);
    cfg.adam_eps = kv.get("adam_eps", cfg.adam_eps);
    cfg.weight_decay = kv.get("weight_decay", cfg.weight_decay);
    cfg.epochs = kv.get("epochs", static_cast<std::uint64_t>(cfg.epochs));
    cfg.pool_depth = kv.get("pool_depth", static_cast<std::uint64_t>(cfg.pool_depth));
    cfg.filter_n = kv.get("filter_n", static_cast<std::uint64_t>(cfg.filter_n));
    cfg.seed = kv.get("seed", static_cast<std::uint64_t>(cfg.seed));
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

json metrics_to_json(const cort::MetricReport& report) {
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

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"complementary first-stage passage retrieval engine"};
    app.require_subcommand(1);

    // ---- build-bm25 -------------------------------------------------------
    auto* build_bm25 = app.add_subcommand("build-bm25", "build an inverted index from a TSV corpus");
    struct {
        std::string corpus, out;
        cort::Bm25Params params;
    } bb;
    build_bm25->add_option("--corpus", bb.corpus, "id<TAB>text corpus")->required();
    build_bm25->add_option("--out", bb.out, "output index file")->required();
    build_bm25->add_option("--k1", bb.params.k1, "BM25 k1");
    build_bm25->add_option("--b", bb.params.b, "BM25 b");
    build_bm25->add_flag("--stopwords", bb.params.remove_stopwords, "drop stopwords");
    build_bm25->add_flag("--stem", bb.params.stem, "apply s-stemming");
    build_bm25->callback([&]() {
        cort::Corpus corpus = cort::load_corpus(bb.corpus);
        cort::InvertedIndex index = cort::InvertedIndex::build(corpus, bb.params);
        index.save(bb.out);
        std::cout << "indexed " << index.doc_count() << " documents, avg length "
                  << index.avg_doc_len() << "\n";
    });

    // ---- embed-import -----------------------------------------------------
    auto* embed_import = app.add_subcommand("embed-import",
                                            "validate (and re-emit) a context embedding file");
    struct {
        std::string vectors, ids, kind = "passage", out, out_ids;
    } ei;
    embed_import->add_option("--vectors", ei.vectors, "embedding file")->required();
    embed_import->add_option("--ids", ei.ids, "sidecar id file")->required();
    embed_import->add_option("--kind", ei.kind, "passage|query")
        ->check(CLI::IsMember({"passage", "query"}));
    embed_import->add_option("--out", ei.out, "canonical copy of the vectors");
    embed_import->add_option("--out-ids", ei.out_ids, "canonical copy of the ids");
    embed_import->callback([&]() {
        cort::StoreKind kind =
            ei.kind == "query" ? cort::StoreKind::kQuery : cort::StoreKind::kPassage;
        cort::ContextEmbeddingStore store = cort::load_embeddings(ei.vectors, ei.ids, kind);
        std::cout << "ok: " << store.count() << " rows, dim " << store.dim << "\n";
        if (!ei.out.empty()) {
            cort::write_embeddings(ei.out, ei.out_ids.empty() ? ei.out + ".ids" : ei.out_ids,
                                   store);
        }
    });

    // ---- train-head -------------------------------------------------------
    auto* train_head = app.add_subcommand("train-head", "train the projection head");
    struct {
        std::string query_vectors, query_ids, passage_vectors, passage_ids;
        std::string qrels, run, config, out, trace_out;
        std::uint32_t repr_dim = 128;
    } th;
    train_head->add_option("--query-vectors", th.query_vectors)->required();
    train_head->add_option("--query-ids", th.query_ids)->required();
    train_head->add_option("--passage-vectors", th.passage_vectors)->required();
    train_head->add_option("--passage-ids", th.passage_ids)->required();
    train_head->add_option("--qrels", th.qrels)->required();
    train_head->add_option("--bm25-run", th.run, "BM25 run over the training queries")->required();
    train_head->add_option("--config", th.config, "key=value training configuration");
    train_head->add_option("--repr-dim", th.repr_dim, "representation size e");
    train_head->add_option("--out", th.out, "head checkpoint")->required();
    train_head->add_option("--trace-out", th.trace_out, "epoch loss trace (JSON)");
    train_head->callback([&]() {
        cort::KeyValueConfig kv = th.config.empty() ? cort::KeyValueConfig()
                                                    : cort::KeyValueConfig::from_file(th.config);
        cort::TrainConfig cfg = train_config_from(kv);
        cort::ContextEmbeddingStore queries =
            cort::load_embeddings(th.query_vectors, th.query_ids, cort::StoreKind::kQuery);
        cort::ContextEmbeddingStore passages =
            cort::load_embeddings(th.passage_vectors, th.passage_ids, cort::StoreKind::kPassage);
        cort::Qrels qrels = cort::load_qrels(th.qrels);
        std::vector<cort::Ranking> run = cort::read_run(th.run).rankings;

        cort::ProjectionHead head =
            cort::ProjectionHead::init_random(queries.dim, th.repr_dim, cfg.seed);
        cort::TrainResult result = cort::train(head, queries, passages, qrels, run, cfg);
        head.save(th.out);

        json trace = {{"epoch_losses", result.epoch_losses},
                      {"optimizer_steps", result.optimizer_steps},
                      {"triples_seen", result.triples_seen},
                      {"skipped_queries", result.skipped_queries}};
        if (!th.trace_out.empty()) write_text(th.trace_out, trace.dump(2) + "\n");
        std::cout << trace.dump(2) << "\n";
    });

    // ---- encode -----------------------------------------------------------
    auto* encode = app.add_subcommand("encode", "project and normalize a context store");
    struct {
        std::string head, vectors, ids, out, out_ids, kind = "passage";
    } en;
    encode->add_option("--head", en.head)->required();
    encode->add_option("--vectors", en.vectors)->required();
    encode->add_option("--ids", en.ids)->required();
    encode->add_option("--kind", en.kind)->check(CLI::IsMember({"passage", "query"}));
    encode->add_option("--out", en.out)->required();
    encode->add_option("--out-ids", en.out_ids);
    encode->callback([&]() {
        cort::StoreKind kind =
            en.kind == "query" ? cort::StoreKind::kQuery : cort::StoreKind::kPassage;
        cort::ProjectionHead head = cort::ProjectionHead::load(en.head);
        cort::ContextEmbeddingStore store = cort::load_embeddings(en.vectors, en.ids, kind);
        cort::ContextEmbeddingStore repr = cort::encode_store(head, store);
        cort::write_embeddings(en.out, en.out_ids.empty() ? en.out + ".ids" : en.out_ids, repr);
        std::cout << "encoded " << repr.count() << " rows to dim " << repr.dim << "\n";
    });

    // ---- index-dense ------------------------------------------------------
    auto* index_dense = app.add_subcommand("index-dense", "build the partitioned dense index");
    struct {
        std::string repr, ids, out, out_ids;
        std::uint32_t partitions = 1;
    } idn;
    index_dense->add_option("--repr", idn.repr, "normalized representation store")->required();
    index_dense->add_option("--ids", idn.ids)->required();
    index_dense->add_option("--partitions", idn.partitions);
    index_dense->add_option("--out", idn.out)->required();
    index_dense->add_option("--out-ids", idn.out_ids);
    index_dense->callback([&]() {
        cort::ContextEmbeddingStore repr =
            cort::load_embeddings(idn.repr, idn.ids, cort::StoreKind::kPassage);
        cort::DenseIndex index = cort::DenseIndex::build(repr, idn.partitions);
        index.save(idn.out, idn.out_ids.empty() ? idn.out + ".ids" : idn.out_ids);
        std::cout << "dense index: " << index.size() << " vectors, dim " << index.dim() << ", "
                  << index.partitions() << " partitions\n";
    });

    // ---- index-ann --------------------------------------------------------
    auto* index_ann = app.add_subcommand("index-ann", "build the navigable ANN graph");
    struct {
        std::string index, ids, out;
        cort::AnnBuildParams params;
    } ia;
    index_ann->add_option("--index", ia.index, "dense index file")->required();
    index_ann->add_option("--ids", ia.ids, "dense index id sidecar")->required();
    index_ann->add_option("--max-degree", ia.params.max_degree);
    index_ann->add_option("--ef-construction", ia.params.ef_construction);
    index_ann->add_option("--out", ia.out)->required();
    index_ann->callback([&]() {
        cort::DenseIndex index = cort::DenseIndex::load(ia.index, ia.ids);
        cort::AnnGraph graph = cort::AnnGraph::build(index, ia.params);
        graph.save(ia.out);
        std::cout << "ann graph over " << graph.size() << " nodes, connected: "
                  << (graph.is_connected() ? "yes" : "no") << "\n";
    });

    // ---- search -----------------------------------------------------------
    auto* search = app.add_subcommand("search", "run first-stage retrieval");
    struct {
        std::string mode = "bm25", retrieval = "exhaustive";
        std::string index, queries;  // bm25 mode
        std::string dense, dense_ids, ann, head, query_vectors, query_ids;  // cort mode
        std::size_t k = 1000;
        double eps = 0.1;
        std::uint32_t partitions = 0;  // 0: keep the index's partition count
        unsigned threads = 1;
        std::string out, tag;
    } se;
    search->add_option("--mode", se.mode)->check(CLI::IsMember({"bm25", "cort"}));
    search->add_option("--k", se.k);
    search->add_option("--index", se.index, "bm25 index file");
    search->add_option("--queries", se.queries, "query TSV (bm25 mode)");
    search->add_option("--dense", se.dense, "dense index file");
    search->add_option("--dense-ids", se.dense_ids);
    search->add_option("--ann", se.ann, "ann graph file (retrieval=ann)");
    search->add_option("--head", se.head, "projection head checkpoint");
    search->add_option("--query-vectors", se.query_vectors, "query context embeddings");
    search->add_option("--query-ids", se.query_ids);
    search->add_option("--retrieval", se.retrieval)
        ->check(CLI::IsMember({"exhaustive", "ann"}));
    search->add_option("--eps", se.eps, "ann search range coefficient");
    search->add_option("--partitions", se.partitions, "override partition count");
    search->add_option("--threads", se.threads);
    search->add_option("--out", se.out, "TREC run output")->required();
    search->add_option("--tag", se.tag, "run tag (defaults to the mode)");
    search->callback([&]() {
        std::string tag = se.tag.empty() ? se.mode : se.tag;
        std::vector<cort::Ranking> run;
        if (se.mode == "bm25") {
            if (se.index.empty() || se.queries.empty()) {
                throw CLI::ValidationError("bm25 mode needs --index and --queries");
            }
            cort::InvertedIndex index = cort::InvertedIndex::load(se.index);
            cort::Corpus queries = cort::load_corpus(se.queries);
            for (std::size_t q = 0; q < queries.size(); ++q) {
                run.push_back(index.search(queries.ids.external(static_cast<cort::InternalId>(q)),
                                           queries.texts[q], se.k));
            }
        } else {
            if (se.dense.empty() || se.head.empty() || se.query_vectors.empty()) {
                throw CLI::ValidationError(
                    "cort mode needs --dense, --head and --query-vectors");
            }
            cort::DenseIndex index = cort::DenseIndex::load(
                se.dense, se.dense_ids.empty() ? se.dense + ".ids" : se.dense_ids);
            cort::ProjectionHead head = cort::ProjectionHead::load(se.head);
            cort::ContextEmbeddingStore queries = cort::load_embeddings(
                se.query_vectors, se.query_ids.empty() ? se.query_vectors + ".ids" : se.query_ids,
                cort::StoreKind::kQuery);
            std::optional<cort::AnnGraph> graph;
            bool use_ann = se.retrieval == "ann";
            if (use_ann) {
                if (se.ann.empty()) throw CLI::ValidationError("retrieval=ann needs --ann");
                graph = cort::AnnGraph::load(se.ann);
            }
            if (se.partitions != 0) {
                cort::ContextEmbeddingStore repr;
                repr.dim = index.dim();
                repr.kind = cort::StoreKind::kPassage;
                repr.rows.assign(index.row(0), index.row(0) + index.size() * index.dim());
                repr.ids = index.ids();
                index = cort::DenseIndex::build(repr, se.partitions);
            }
            for (std::size_t q = 0; q < queries.count(); ++q) {
                std::vector<float> repr = cort::encode_one(
                    head, std::span<const float>(queries.row(q), queries.dim));
                std::string qid = queries.ids.external(static_cast<cort::InternalId>(q));
                if (use_ann) {
                    cort::AnnSearchResult res = graph->search(index, repr, se.k, se.eps);
                    cort::Ranking ranking;
                    ranking.query_id = qid;
                    ranking.source = cort::RankSource::kCort;
                    for (const cort::DenseHit& hit : res.hits) {
                        ranking.items.push_back({index.ids().external(hit.doc), hit.score});
                    }
                    run.push_back(std::move(ranking));
                } else {
                    run.push_back(index.search_ranking(qid, repr, se.k, se.threads));
                }
            }
        }
        cort::write_run(se.out, run, tag);
        std::cout << "wrote " << run.size() << " rankings to " << se.out << "\n";
    });

    // ---- fuse -------------------------------------------------------------
    auto* fuse = app.add_subcommand("fuse", "zip-merge two runs (primary first)");
    struct {
        std::string primary, secondary, out, tag = "fused";
        std::size_t k = 1000;
    } fu;
    fuse->add_option("--primary", fu.primary)->required();
    fuse->add_option("--secondary", fu.secondary)->required();
    fuse->add_option("--k", fu.k);
    fuse->add_option("--out", fu.out)->required();
    fuse->add_option("--tag", fu.tag);
    fuse->callback([&]() {
        cort::RunReadResult primary = cort::read_run(fu.primary);
        cort::RunReadResult secondary = cort::read_run(fu.secondary);
        if (primary.resorted || secondary.resorted) {
            std::cerr << "warning: input run was not sorted; re-sorted by score\n";
        }
        std::unordered_map<std::string, const cort::Ranking*> secondary_by_query;
        for (const cort::Ranking& r : secondary.rankings) {
            secondary_by_query[r.query_id] = &r;
        }
        std::vector<cort::Ranking> fused;
        cort::Ranking empty;
        for (const cort::Ranking& p : primary.rankings) {
            auto it = secondary_by_query.find(p.query_id);
            const cort::Ranking& s = it == secondary_by_query.end() ? empty : *it->second;
            fused.push_back(cort::zip_merge(p, s, fu.k));
        }
        cort::write_run(fu.out, fused, fu.tag);
        std::cout << "fused " << fused.size() << " rankings\n";
    });

    // ---- eval -------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a run against qrels");
    struct {
        std::string run, qrels, cuts = "10,20,50,100,200,500,1000";
        int binarize = 1;
        std::string out_tsv, out_json;
    } ev;
    eval_cmd->add_option("--run", ev.run)->required();
    eval_cmd->add_option("--qrels", ev.qrels)->required();
    eval_cmd->add_option("--cuts", ev.cuts);
    eval_cmd->add_option("--binarize", ev.binarize,
                         "grade threshold for MRR/Recall/MAP (TREC DL style uses 2)");
    eval_cmd->add_option("--out-tsv", ev.out_tsv);
    eval_cmd->add_option("--out-json", ev.out_json);
    eval_cmd->callback([&]() {
        cort::RunReadResult run = cort::read_run(ev.run);
        if (run.resorted) {
            std::cerr << "warning: run was not sorted by score; re-sorted\n";
        }
        cort::Qrels qrels = cort::load_qrels(ev.qrels);
        std::vector<std::size_t> cuts = parse_size_list(ev.cuts);
        cort::MetricReport report = cort::evaluate(run.rankings, qrels, cuts, ev.binarize);

        std::ostringstream tsv;
        tsv << "metric\tcut\tmean\n";
        for (const auto& [metric, by_cut] : report.means) {
            for (const auto& [cut, value] : by_cut) {
                tsv << metric << '\t' << cut << '\t' << cort::format_score(value) << '\n';
            }
        }
        std::cout << tsv.str();
        if (!ev.out_tsv.empty()) write_text(ev.out_tsv, tsv.str());
        if (!ev.out_json.empty()) {
            write_text(ev.out_json, metrics_to_json(report).dump(2) + "\n");
        }
    });

    // ---- saturation -------------------------------------------------------
    auto* saturation = app.add_subcommand(
        "saturation", "find where doubling the candidate count stops paying (<0.5% gain)");
    struct {
        std::string table, runs, qrels;
        std::size_t k = 10;
    } sa;
    saturation->add_option("--table", sa.table, "TSV of x<TAB>value pairs");
    saturation->add_option("--runs", sa.runs, "directory of <x>.trec run files");
    saturation->add_option("--qrels", sa.qrels, "qrels (with --runs)");
    saturation->add_option("--k", sa.k, "MRR cut (with --runs)");
    saturation->callback([&]() {
        std::vector<std::pair<double, double>> series;
        if (!sa.table.empty()) {
            std::ifstream in(sa.table);
            if (!in) throw std::runtime_error("cannot open " + sa.table);
            double x = 0, v = 0;
            while (in >> x >> v) series.emplace_back(x, v);
        } else if (!sa.runs.empty()) {
            if (sa.qrels.empty()) throw CLI::ValidationError("--runs needs --qrels");
            cort::Qrels qrels = cort::load_qrels(sa.qrels);
            std::vector<std::pair<double, std::string>> files;
            for (const auto& entry : std::filesystem::directory_iterator(sa.runs)) {
                if (entry.path().extension() == ".trec") {
                    files.emplace_back(std::stod(entry.path().stem().string()),
                                       entry.path().string());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& [x, file] : files) {
                cort::RunReadResult run = cort::read_run(file);
                double sum = 0.0;
                std::size_t n = 0;
                for (const cort::Ranking& r : run.rankings) {
                    if (!qrels.has_query(r.query_id)) continue;
                    sum += cort::mrr_at(r, qrels, sa.k);
                    ++n;
                }
                series.emplace_back(x, n == 0 ? 0.0 : sum / n);
            }
        } else {
            throw CLI::ValidationError("need --table or --runs");
        }
        std::cout << "x\tvalue\n";
        for (const auto& [x, v] : series) {
            std::cout << x << '\t' << cort::format_score(v) << '\n';
        }
        auto sat = cort::saturation_point(series);
        if (sat) {
            std::cout << "saturation_x\t" << *sat << "\n";
        } else {
            std::cout << "saturation_x\tnone\n";
        }
    });

    // ---- rerank-sim -------------------------------------------------------
    auto* rerank_sim = app.add_subcommand(
        "rerank-sim", "candidate-count study with an oracle or logistic re-ranker");
    struct {
        std::string candidates, qrels, corpus, queries, x = "8,16,32,64,128,256,512";
        std::string mode = "oracle", out;
    } rs;
    rerank_sim->add_option("--candidates", rs.candidates, "first-stage TREC run")->required();
    rerank_sim->add_option("--qrels", rs.qrels)->required();
    rerank_sim->add_option("--mode", rs.mode)->check(CLI::IsMember({"oracle", "logistic"}));
    rerank_sim->add_option("--corpus", rs.corpus, "corpus TSV (logistic features)");
    rerank_sim->add_option("--queries", rs.queries, "query TSV (logistic features)");
    rerank_sim->add_option("--x", rs.x, "candidate counts");
    rerank_sim->add_option("--out", rs.out, "study TSV");
    rerank_sim->callback([&]() {
        cort::RunReadResult run = cort::read_run(rs.candidates);
        cort::Qrels qrels = cort::load_qrels(rs.qrels);
        std::vector<std::size_t> xs = parse_size_list(rs.x);

        cort::CandidateStudy study;
        if (rs.mode == "oracle") {
            cort::FeatureExtractor none = [](const std::string&, const cort::RankedDoc&) {
                return cort::FeatureVector{};
            };
            study = cort::candidate_study(run.rankings, qrels, xs, nullptr, none);
        } else {
            if (rs.corpus.empty() || rs.queries.empty()) {
                throw CLI::ValidationError("logistic mode needs --corpus and --queries");
            }
            cort::Corpus corpus = cort::load_corpus(rs.corpus);
            cort::Corpus queries = cort::load_corpus(rs.queries);
            // Features: first-stage score, term overlap, log passage length.
            cort::FeatureExtractor extract = [&](const std::string& qid,
                                                 const cort::RankedDoc& cand) {
                cort::FeatureVector f(3, 0.0);
                f[0] = cand.score;
                cort::InternalId did = corpus.ids.find(cand.doc_id);
                cort::InternalId qiid = queries.ids.find(qid);
                if (did != cort::kInvalidId && qiid != cort::kInvalidId) {
                    auto dterms = cort::tokenize(corpus.texts[did]);
                    auto qterms = cort::tokenize(queries.texts[qiid]);
                    std::unordered_set<std::string> dset(dterms.begin(), dterms.end());
                    std::size_t overlap = 0;
                    for (const auto& t : qterms) overlap += dset.count(t);
                    f[1] = qterms.empty()
                               ? 0.0
                               : static_cast<double>(overlap) / static_cast<double>(qterms.size());
                    f[2] = std::log(1.0 + static_cast<double>(dterms.size()));
                }
                return f;
            };
            std::vector<cort::FeatureVector> features;
            std::vector<int> labels;
            cort::RerankTrainConfig train_cfg;
            cort::collect_training_pairs(run.rankings, qrels, extract, train_cfg, features,
                                         labels);
            cort::RerankTrainResult trained = cort::train_reranker(features, labels, train_cfg);
            if (trained.degenerate_labels) {
                std::cerr << "warning: training labels are all one class\n";
            }
            study = cort::candidate_study(run.rankings, qrels, xs, &trained.model, extract);
        }

        std::ostringstream tsv;
        tsv << "x\tmrr10\trecall20\trecall_all\n";
        for (const cort::CandidateStudyRow& row : study.rows) {
            tsv << row.x << '\t' << cort::format_score(row.mrr10) << '\t'
                << cort::format_score(row.recall20) << '\t'
                << cort::format_score(row.recall_all) << '\n';
        }
        if (study.saturation_x) {
            tsv << "saturation_x\t" << *study.saturation_x << "\n";
        } else {
            tsv << "saturation_x\tnone\n";
        }
        std::cout << tsv.str();
        if (!rs.out.empty()) write_text(rs.out, tsv.str());
    });

    // ---- bench ------------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "latency benchmark over a query set");
    struct {
        std::string bm25, queries, head, query_vectors, query_ids, dense, dense_ids, ann;
        std::string batch_sizes = "1,32", eps = "0.01,0.1,0.4";
        std::size_t k = 1000, reps = 3, warmup = 8;
        unsigned threads = 1;
        std::string out_tsv, out_json;
    } be;
    bench->add_option("--bm25", be.bm25, "bm25 index file");
    bench->add_option("--queries", be.queries, "query TSV (bm25 rows)");
    bench->add_option("--head", be.head);
    bench->add_option("--query-vectors", be.query_vectors);
    bench->add_option("--query-ids", be.query_ids);
    bench->add_option("--dense", be.dense);
    bench->add_option("--dense-ids", be.dense_ids);
    bench->add_option("--ann", be.ann);
    bench->add_option("--k", be.k);
    bench->add_option("--batch-sizes", be.batch_sizes);
    bench->add_option("--eps", be.eps, "ann search range sweep");
    bench->add_option("--reps", be.reps);
    bench->add_option("--warmup", be.warmup);
    bench->add_option("--threads", be.threads);
    bench->add_option("--out-tsv", be.out_tsv);
    bench->add_option("--out-json", be.out_json);
    bench->callback([&]() {
        cort::BenchConfig cfg;
        cfg.k = be.k;
        cfg.batch_sizes = parse_size_list(be.batch_sizes);
        cfg.ann_eps = parse_double_list(be.eps);
        cfg.repetitions = be.reps;
        cfg.warmup_queries = be.warmup;
        cfg.threads = be.threads;

        std::optional<cort::InvertedIndex> bm25_index;
        std::optional<cort::Corpus> queries;
        std::optional<cort::ProjectionHead> head;
        std::optional<cort::ContextEmbeddingStore> query_ctx;
        std::optional<cort::DenseIndex> dense;
        std::optional<cort::AnnGraph> ann;

        if (!be.bm25.empty()) bm25_index = cort::InvertedIndex::load(be.bm25);
        if (!be.queries.empty()) queries = cort::load_corpus(be.queries);
        if (!be.head.empty()) head = cort::ProjectionHead::load(be.head);
        if (!be.query_vectors.empty()) {
            query_ctx = cort::load_embeddings(
                be.query_vectors,
                be.query_ids.empty() ? be.query_vectors + ".ids" : be.query_ids,
                cort::StoreKind::kQuery);
        }
        if (!be.dense.empty()) {
            dense = cort::DenseIndex::load(
                be.dense, be.dense_ids.empty() ? be.dense + ".ids" : be.dense_ids);
        }
        if (!be.ann.empty()) ann = cort::AnnGraph::load(be.ann);

        cort::BenchInputs inputs;
        if (bm25_index) inputs.bm25 = &*bm25_index;
        if (queries) inputs.queries = &*queries;
        if (head) inputs.head = &*head;
        if (query_ctx) inputs.query_context = &*query_ctx;
        if (dense) inputs.dense = &*dense;
        if (ann) inputs.ann = &*ann;

        std::vector<cort::BenchRow> rows = cort::run_bench(inputs, cfg);
        std::string tsv = cort::bench_report_tsv(rows);
        std::cout << tsv;
        if (!be.out_tsv.empty()) write_text(be.out_tsv, tsv);
        if (!be.out_json.empty()) {
            json out = json::array();
            for (const cort::BenchRow& row : rows) {
                out.push_back({{"mode", row.mode},
                               {"phase", row.phase},
                               {"batch", row.batch_size},
                               {"mean_ms", row.stats.mean_ms},
                               {"median_ms", row.stats.median_ms},
                               {"p95_ms", row.stats.p95_ms},
                               {"samples", row.stats.samples}});
            }
            write_text(be.out_json, out.dump(2) + "\n");
        }
    });

    // ---- synth ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate the vocabulary-mismatch corpus");
    struct {
        std::string out, synonyms;
        cort::SynthConfig cfg;
    } sy;
    synth->add_option("--out", sy.out, "output directory")->required();
    synth->add_option("--docs", sy.cfg.n_docs);
    synth->add_option("--train-queries", sy.cfg.n_train_queries);
    synth->add_option("--test-queries", sy.cfg.n_test_queries);
    synth->add_option("--topics", sy.cfg.n_topics);
    synth->add_option("--mismatch", sy.cfg.mismatch_fraction);
    synth->add_option("--confounds", sy.cfg.confounds_per_query);
    synth->add_option("--context-dim", sy.cfg.context_dim);
    synth->add_option("--seed", sy.cfg.seed);
    synth->add_option("--synonyms", sy.synonyms, "optional word<TAB>synonym table");
    synth->callback([&]() {
        if (!sy.synonyms.empty()) {
            std::ifstream in(sy.synonyms);
            if (!in) throw std::runtime_error("cannot open " + sy.synonyms);
            std::string line;
            while (std::getline(in, line)) {
                std::size_t tab = line.find('\t');
                if (tab == std::string::npos) continue;
                sy.cfg.synonyms[line.substr(0, tab)] = line.substr(tab + 1);
            }
        }
        cort::SynthData data = cort::generate_synthetic(sy.cfg);
        cort::write_synthetic(data, sy.out);
        std::cout << "generated " << data.passages.size() << " passages, "
                  << data.train_queries.size() << " train / " << data.test_queries.size()
                  << " test queries (" << data.mismatch_train_queries.size() << "/"
                  << data.mismatch_test_queries.size() << " mismatch)\n";
    });

    // ---- pipeline ---------------------------------------------------------
    auto* pipeline = app.add_subcommand("pipeline", "run the full toy experiment");
    struct {
        std::string out, config;
        std::uint64_t seed = 42;
    } pl;
    pipeline->add_option("--out", pl.out, "run directory")->required();
    pipeline->add_option("--config", pl.config, "key=value overrides");
    pipeline->add_option("--seed", pl.seed);
    pipeline->callback([&]() {
        cort::PipelineConfig cfg;
        cfg.out_dir = pl.out;
        cfg.synth.seed = pl.seed;
        cfg.train.seed = pl.seed;
        if (!pl.config.empty()) {
            cort::KeyValueConfig kv = cort::KeyValueConfig::from_file(pl.config);
            cfg.synth.n_docs = kv.get("n_docs", static_cast<std::uint64_t>(cfg.synth.n_docs));
            cfg.synth.n_train_queries =
                kv.get("n_train_queries", static_cast<std::uint64_t>(cfg.synth.n_train_queries));
            cfg.synth.n_test_queries =
                kv.get("n_test_queries", static_cast<std::uint64_t>(cfg.synth.n_test_queries));
            cfg.synth.n_topics = kv.get("n_topics", static_cast<std::uint64_t>(cfg.synth.n_topics));
            cfg.synth.mismatch_fraction = kv.get("mismatch_fraction", cfg.synth.mismatch_fraction);
            cfg.synth.context_dim = static_cast<std::uint32_t>(
                kv.get("context_dim", static_cast<std::uint64_t>(cfg.synth.context_dim)));
            cfg.repr_dim = static_cast<std::uint32_t>(
                kv.get("repr_dim", static_cast<std::uint64_t>(cfg.repr_dim)));
            cfg.partitions = static_cast<std::uint32_t>(
                kv.get("partitions", static_cast<std::uint64_t>(cfg.partitions)));
            cfg.search_k = kv.get("search_k", static_cast<std::uint64_t>(cfg.search_k));
            cort::TrainConfig base = cfg.train;
            cfg.train = train_config_from(kv);
            cfg.train.seed = pl.seed;
            if (!kv.has("learning_rate")) cfg.train.learning_rate = base.learning_rate;
            if (!kv.has("warmup_steps")) cfg.train.warmup_steps = base.warmup_steps;
            if (!kv.has("accum_steps")) cfg.train.accum_steps = base.accum_steps;
        }
        cort::PipelineResult result = cort::run_pipeline(cfg);
        std::cout << "recall@50 bm25=" << result.bm25_recall50
                  << " cort=" << result.cort_recall50 << " fused=" << result.fused_recall50
                  << "\n";
        std::cout << "report: " << result.report_path << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
