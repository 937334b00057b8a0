#include "cort/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace cort {

namespace {

std::vector<int> grades_in_order(const Ranking& ranking, const Qrels& qrels) {
    std::vector<int> grades;
    grades.reserve(ranking.items.size());
    for (const RankedDoc& item : ranking.items) {
        grades.push_back(qrels.grade(ranking.query_id, item.doc_id));
    }
    return grades;
}

std::size_t relevant_count(const Qrels& qrels, const std::string& query_id, int binarize_grade) {
    const auto* docs = qrels.docs_for(query_id);
    if (docs == nullptr) return 0;
    std::size_t n = 0;
    for (const auto& [_, grade] : *docs) {
        if (grade >= binarize_grade) ++n;
    }
    return n;
}

}  // namespace

double mrr_at(const Ranking& ranking, const Qrels& qrels, std::size_t k, int binarize_grade) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    std::size_t depth = std::min(k, ranking.items.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (qrels.grade(ranking.query_id, ranking.items[i].doc_id) >= binarize_grade) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

double ndcg_at(const Ranking& ranking, const Qrels& qrels, std::size_t k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    std::vector<int> grades = grades_in_order(ranking, qrels);
    double dcg = 0.0;
    std::size_t depth = std::min(k, grades.size());
    for (std::size_t i = 0; i < depth; ++i) {
        dcg += static_cast<double>(grades[i]) / std::log2(static_cast<double>(i) + 2.0);
    }

    std::vector<int> ideal;
    if (const auto* docs = qrels.docs_for(ranking.query_id)) {
        for (const auto& [_, grade] : *docs) {
            if (grade > 0) ideal.push_back(grade);
        }
    }
    if (ideal.empty()) return 0.0;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += static_cast<double>(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
}

std::optional<double> recall_at(const Ranking& ranking, const Qrels& qrels, std::size_t k,
                                int binarize_grade) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    std::size_t total = relevant_count(qrels, ranking.query_id, binarize_grade);
    if (total == 0) return std::nullopt;
    std::size_t found = 0;
    std::size_t depth = std::min(k, ranking.items.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (qrels.grade(ranking.query_id, ranking.items[i].doc_id) >= binarize_grade) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(total);
}

std::optional<double> map_at(const Ranking& ranking, const Qrels& qrels, std::size_t k,
                             int binarize_grade) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    std::size_t total = relevant_count(qrels, ranking.query_id, binarize_grade);
    if (total == 0) return std::nullopt;
    double sum = 0.0;
    std::size_t found = 0;
    std::size_t depth = std::min(k, ranking.items.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (qrels.grade(ranking.query_id, ranking.items[i].doc_id) >= binarize_grade) {
            ++found;
            sum += static_cast<double>(found) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total);
}

std::optional<double> saturation_point(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 2) {
        throw std::invalid_argument("saturation needs at least two points");
    }
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        if (series[i + 1].second < 1.005 * series[i].second) {
            return series[i].first;
        }
    }
    return std::nullopt;
}

MetricReport evaluate(const std::vector<Ranking>& run, const Qrels& qrels,
                      const std::vector<std::size_t>& cuts, int binarize_grade) {
    MetricReport report;
    report.cuts = cuts;

    for (const Ranking& ranking : run) {
        if (!qrels.has_query(ranking.query_id)) {
            ++report.skipped_queries;
            continue;
        }
        ++report.evaluated_queries;
        for (std::size_t k : cuts) {
            report.per_query["mrr"][k].emplace_back(ranking.query_id,
                                                    mrr_at(ranking, qrels, k, binarize_grade));
            report.per_query["ndcg"][k].emplace_back(ranking.query_id, ndcg_at(ranking, qrels, k));
            if (auto r = recall_at(ranking, qrels, k, binarize_grade)) {
                report.per_query["recall"][k].emplace_back(ranking.query_id, *r);
            }
            if (auto m = map_at(ranking, qrels, k, binarize_grade)) {
                report.per_query["map"][k].emplace_back(ranking.query_id, *m);
            }
        }
    }

    for (const auto& [metric, by_cut] : report.per_query) {
        for (const auto& [k, values] : by_cut) {
            double sum = 0.0;
            for (const auto& [_, v] : values) sum += v;
            report.means[metric][k] = values.empty() ? 0.0 : sum / values.size();
        }
    }
    // Cuts with no evaluable queries still appear in the means (as zero).
    for (const char* metric : {"mrr", "ndcg", "recall", "map"}) {
        for (std::size_t k : cuts) {
            report.means[metric].emplace(k, 0.0);
        }
    }
    return report;
}

std::string format_score(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

RunReadResult read_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    RunReadResult result;
    std::unordered_map<std::string, std::size_t> index;  // query id -> slot

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string qid, q0, docid, tag;
        long rank = 0;
        double score = 0.0;
        if (!(fields >> qid >> q0 >> docid >> rank >> score >> tag)) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": malformed run line");
        }
        auto [it, inserted] = index.emplace(qid, result.rankings.size());
        if (inserted) {
            Ranking r;
            r.query_id = qid;
            r.source = RankSource::kExternal;
            result.rankings.push_back(std::move(r));
        }
        result.rankings[it->second].items.push_back({docid, score});
    }

    for (Ranking& ranking : result.rankings) {
        bool sorted = std::is_sorted(ranking.items.begin(), ranking.items.end(),
                                     [](const RankedDoc& a, const RankedDoc& b) {
                                         return a.score > b.score;
                                     });
        if (!sorted) {
            result.resorted = true;
            std::stable_sort(ranking.items.begin(), ranking.items.end(),
                             [](const RankedDoc& a, const RankedDoc& b) {
                                 if (a.score != b.score) return a.score > b.score;
                                 return a.doc_id < b.doc_id;
                             });
        }
    }
    return result;
}

void write_run(const std::string& path, const std::vector<Ranking>& run,
               const std::string& tag) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const Ranking& ranking : run) {
        for (std::size_t i = 0; i < ranking.items.size(); ++i) {
            const RankedDoc& item = ranking.items[i];
            out << ranking.query_id << " Q0 " << item.doc_id << ' ' << (i + 1) << ' '
                << format_score(item.score) << ' ' << tag << '\n';
        }
    }
}

}  // namespace cort
