#include "cort/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cort/rng.hpp"

namespace cort {

namespace {

constexpr std::size_t kWordsPerTopic = 8;

std::string topic_word(std::size_t topic, std::size_t slot) {
    return "term" + std::to_string(topic) + "x" + std::to_string(slot);
}

std::string anchor_word(std::size_t query) { return "anchor" + std::to_string(query); }

std::string filler_word(std::size_t i) { return "filler" + std::to_string(i); }

std::string synonym_of(const SynthConfig& cfg, const std::string& word) {
    auto it = cfg.synonyms.find(word);
    if (it != cfg.synonyms.end()) return it->second;
    return "syn" + word;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

class EmbeddingBuilder {
public:
    EmbeddingBuilder(const SynthConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {
        topic_centers_.resize(cfg.n_topics);
        std::size_t content_dims = cfg.context_dim - cfg.style_dims;
        for (auto& center : topic_centers_) {
            center.assign(cfg.context_dim, 0.0);
            double norm2 = 0.0;
            for (std::size_t d = 0; d < content_dims; ++d) {
                center[d] = rng.gaussian();
                norm2 += center[d] * center[d];
            }
            double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
            for (std::size_t d = 0; d < content_dims; ++d) center[d] *= inv;
        }
    }

    /// Fresh per-query signal direction (content dims only, unit norm).
    std::vector<double> make_signal() {
        std::size_t content_dims = cfg_.context_dim - cfg_.style_dims;
        std::vector<double> v(cfg_.context_dim, 0.0);
        double norm2 = 0.0;
        for (std::size_t d = 0; d < content_dims; ++d) {
            v[d] = rng_.gaussian();
            norm2 += v[d] * v[d];
        }
        double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
        for (std::size_t d = 0; d < content_dims; ++d) v[d] *= inv;
        return v;
    }

    /// center(topic) + alpha * signal + noise, with heavy noise on the style
    /// dims that carries no topic information.
    std::vector<float> make_vector(std::size_t topic, const std::vector<double>* signal) {
        std::vector<double> v = topic_centers_[topic];
        if (signal != nullptr) {
            for (std::size_t d = 0; d < v.size(); ++d) v[d] += cfg_.signal_alpha * (*signal)[d];
        }
        std::size_t content_dims = cfg_.context_dim - cfg_.style_dims;
        for (std::size_t d = 0; d < content_dims; ++d) v[d] += cfg_.noise_sigma * rng_.gaussian();
        for (std::size_t d = content_dims; d < v.size(); ++d) {
            v[d] = cfg_.style_sigma * rng_.gaussian();
        }
        std::vector<float> out(v.size());
        for (std::size_t d = 0; d < v.size(); ++d) out[d] = static_cast<float>(v[d]);
        return out;
    }

private:
    const SynthConfig& cfg_;
    Rng& rng_;
    std::vector<std::vector<double>> topic_centers_;
};

void push_row(ContextEmbeddingStore& store, const std::string& id,
              const std::vector<float>& row) {
    store.ids.add(id);
    store.rows.insert(store.rows.end(), row.begin(), row.end());
}

}  // namespace

SynthData generate_synthetic(const SynthConfig& cfg) {
    if (cfg.n_topics == 0) throw std::invalid_argument("need at least one topic");
    if (cfg.style_dims >= cfg.context_dim) {
        throw std::invalid_argument("style_dims must leave room for content dims");
    }
    if (cfg.mismatch_fraction < 0.0 || cfg.mismatch_fraction > 1.0) {
        throw std::invalid_argument("mismatch_fraction must be in [0, 1]");
    }
    const std::size_t n_queries = cfg.n_train_queries + cfg.n_test_queries;
    const std::size_t reserved = n_queries * (1 + cfg.confounds_per_query);
    if (cfg.n_docs < reserved + cfg.n_topics) {
        throw std::invalid_argument("n_docs too small for query count: need at least " +
                                    std::to_string(reserved + cfg.n_topics));
    }

    Rng rng(cfg.seed);
    EmbeddingBuilder embeddings(cfg, rng);

    SynthData data;
    data.passage_context.dim = cfg.context_dim;
    data.passage_context.kind = StoreKind::kPassage;
    data.train_query_context.dim = cfg.context_dim;
    data.train_query_context.kind = StoreKind::kQuery;
    data.test_query_context.dim = cfg.context_dim;
    data.test_query_context.kind = StoreKind::kQuery;

    std::size_t next_doc = 0;
    auto add_passage = [&](const std::string& text, const std::vector<float>& context) {
        std::string id = "d" + std::to_string(next_doc++);
        data.passages.ids.add(id);
        data.passages.texts.push_back(text);
        push_row(data.passage_context, id, context);
        return id;
    };

    for (std::size_t q = 0; q < n_queries; ++q) {
        const bool is_train = q < cfg.n_train_queries;
        const std::size_t topic = q % cfg.n_topics;
        const std::string qid = (is_train ? "qtr" : "qte") + std::to_string(q);

        std::size_t slot_a = static_cast<std::size_t>(rng.bounded(kWordsPerTopic));
        std::size_t slot_b = (slot_a + 1 + static_cast<std::size_t>(
                                                rng.bounded(kWordsPerTopic - 1))) %
                             kWordsPerTopic;
        std::vector<std::string> query_words = {anchor_word(q), topic_word(topic, slot_a),
                                                topic_word(topic, slot_b)};

        std::vector<double> signal = embeddings.make_signal();

        Corpus& queries = is_train ? data.train_queries : data.test_queries;
        ContextEmbeddingStore& query_ctx =
            is_train ? data.train_query_context : data.test_query_context;
        queries.ids.add(qid);
        queries.texts.push_back(join(query_words));
        push_row(query_ctx, qid, embeddings.make_vector(topic, &signal));

        // One relevant passage: verbatim terms or synonym twins.
        bool mismatch = rng.uniform() < cfg.mismatch_fraction;
        std::vector<std::string> rel_words;
        for (const std::string& w : query_words) {
            rel_words.push_back(mismatch ? synonym_of(cfg, w) : w);
        }
        rel_words.push_back(filler_word(rng.bounded(50)));
        rel_words.push_back(filler_word(rng.bounded(50)));
        std::string rel_id = add_passage(join(rel_words), embeddings.make_vector(topic, &signal));

        Qrels& qrels = is_train ? data.train_qrels : data.test_qrels;
        qrels.add(qid, rel_id, 1);
        if (mismatch) {
            (is_train ? data.mismatch_train_queries : data.mismatch_test_queries).push_back(qid);
        }

        // Confounders: repeat query terms with high frequency, live near a
        // different topic in context space.
        for (std::size_t c = 0; c < cfg.confounds_per_query; ++c) {
            std::size_t other_topic =
                (topic + 1 + static_cast<std::size_t>(rng.bounded(cfg.n_topics - 1))) %
                cfg.n_topics;
            std::vector<std::string> words;
            const std::string& stolen = query_words[rng.bounded(query_words.size())];
            std::size_t repeats = 2 + static_cast<std::size_t>(rng.bounded(3));
            for (std::size_t r = 0; r < repeats; ++r) words.push_back(stolen);
            words.push_back(topic_word(other_topic, rng.bounded(kWordsPerTopic)));
            words.push_back(topic_word(other_topic, rng.bounded(kWordsPerTopic)));
            words.push_back(filler_word(rng.bounded(50)));
            add_passage(join(words), embeddings.make_vector(other_topic, nullptr));
        }
    }

    // Background passages: plain topic chatter.
    while (next_doc < cfg.n_docs) {
        std::size_t topic = static_cast<std::size_t>(rng.bounded(cfg.n_topics));
        std::vector<std::string> words;
        std::size_t len = 4 + static_cast<std::size_t>(rng.bounded(4));
        for (std::size_t w = 0; w < len; ++w) {
            if (rng.uniform() < 0.3) {
                words.push_back(filler_word(rng.bounded(50)));
            } else {
                words.push_back(topic_word(topic, rng.bounded(kWordsPerTopic)));
            }
        }
        add_passage(join(words), embeddings.make_vector(topic, nullptr));
    }

    return data;
}

void write_synthetic(const SynthData& data, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

    write_corpus(path("corpus.tsv"), data.passages);
    write_corpus(path("queries_train.tsv"), data.train_queries);
    write_corpus(path("queries_test.tsv"), data.test_queries);

    auto write_qrels = [](const std::string& p, const Qrels& qrels) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + p);
        for (const std::string& qid : qrels.query_ids_sorted()) {
            const auto* docs = qrels.docs_for(qid);
            std::vector<std::string> doc_ids;
            for (const auto& [doc, _] : *docs) doc_ids.push_back(doc);
            std::sort(doc_ids.begin(), doc_ids.end());
            for (const std::string& doc : doc_ids) {
                out << qid << "\t0\t" << doc << '\t' << docs->at(doc) << '\n';
            }
        }
    };
    write_qrels(path("qrels_train.tsv"), data.train_qrels);
    write_qrels(path("qrels_test.tsv"), data.test_qrels);

    write_embeddings(path("ctx_passages.emb"), path("ctx_passages.ids"), data.passage_context);
    write_embeddings(path("ctx_queries_train.emb"), path("ctx_queries_train.ids"),
                     data.train_query_context);
    write_embeddings(path("ctx_queries_test.emb"), path("ctx_queries_test.ids"),
                     data.test_query_context);
}

}  // namespace cort
