#include "cort/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cort {

void TrainConfig::validate() const {
    if (!(margin > 0.0 && margin < 1.0)) {
        throw std::invalid_argument("margin must be in (0, 1)");
    }
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (accum_steps < 1) throw std::invalid_argument("accumulation steps must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (filter_n >= pool_depth) {
        throw std::invalid_argument("filter_n must be smaller than pool_depth");
    }
}

NegativeSampler::NegativeSampler(const Qrels& qrels, const std::vector<Ranking>& bm25_rankings,
                                 std::size_t pool_depth, std::size_t filter_n) {
    for (const Ranking& ranking : bm25_rankings) {
        const auto* labeled = qrels.docs_for(ranking.query_id);
        std::vector<std::string> pool;
        std::size_t depth = std::min(pool_depth, ranking.items.size());
        for (std::size_t rank = filter_n; rank < depth; ++rank) {
            const std::string& doc = ranking.items[rank].doc_id;
            if (labeled != nullptr) {
                auto it = labeled->find(doc);
                if (it != labeled->end() && it->second >= 1) continue;
            }
            pool.push_back(doc);
        }
        if (pool.empty()) {
            ++skipped_;
            continue;
        }
        pools_.emplace(ranking.query_id, std::move(pool));
    }
}

std::optional<std::string> NegativeSampler::sample(const std::string& query_id, Rng& rng) const {
    auto it = pools_.find(query_id);
    if (it == pools_.end()) return std::nullopt;
    const auto& pool = it->second;
    return pool[static_cast<std::size_t>(rng.bounded(pool.size()))];
}

const std::vector<std::string>* NegativeSampler::pool(const std::string& query_id) const {
    auto it = pools_.find(query_id);
    return it == pools_.end() ? nullptr : &it->second;
}

NegativeSample sample_negatives(const Qrels& qrels, const std::vector<Ranking>& bm25_rankings,
                                std::size_t pool_depth, std::size_t filter_n,
                                std::uint64_t seed) {
    NegativeSampler sampler(qrels, bm25_rankings, pool_depth, filter_n);
    Rng rng(seed);
    NegativeSample out;
    out.skipped = sampler.skipped_queries();
    for (const Ranking& ranking : bm25_rankings) {
        auto drawn = sampler.sample(ranking.query_id, rng);
        if (drawn) out.negatives.emplace(ranking.query_id, *drawn);
    }
    return out;
}

namespace {

// Decoupled weight decay with bias-corrected moment estimates.
class AdamW {
public:
    AdamW(std::size_t n, const TrainConfig& cfg)
        : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad, double lr,
              bool decay) {
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            double mhat = m_[i] / bc1;
            double vhat = v_[i] / bc2;
            double update = mhat / (std::sqrt(vhat) + cfg_.adam_eps);
            if (decay) update += cfg_.weight_decay * params[i];
            params[i] -= lr * update;
        }
    }

private:
    TrainConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

// Linear warmup to the base rate, then linear decay to zero.
double lr_at(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) {
    double s = static_cast<double>(step);  // 1-based
    if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps) {
        return cfg.learning_rate * s / static_cast<double>(cfg.warmup_steps);
    }
    if (total_steps <= cfg.warmup_steps) return cfg.learning_rate;
    double remaining = static_cast<double>(total_steps) - s;
    double window = static_cast<double>(total_steps - cfg.warmup_steps);
    return cfg.learning_rate * std::max(0.0, remaining / window);
}

struct EligibleQuery {
    std::string id;
    std::size_t query_row;
    std::vector<std::size_t> positive_rows;
};

}  // namespace

TrainResult train(ProjectionHead& head, const ContextEmbeddingStore& query_store,
                  const ContextEmbeddingStore& passage_store, const Qrels& qrels,
                  const std::vector<Ranking>& bm25_rankings, const TrainConfig& config) {
    config.validate();
    if (query_store.dim != head.input_dim() || passage_store.dim != head.input_dim()) {
        throw std::invalid_argument("context store dims do not match head input dim");
    }

    NegativeSampler sampler(qrels, bm25_rankings, config.pool_depth, config.filter_n);

    TrainResult result;

    // A query participates when it has a context vector, at least one
    // positively labeled passage with a context vector, and a negative pool.
    std::vector<EligibleQuery> eligible;
    for (const Ranking& ranking : bm25_rankings) {
        const std::string& qid = ranking.query_id;
        auto qrow = query_store.row_of(qid);
        if (!qrow || sampler.pool(qid) == nullptr) {
            ++result.skipped_queries;
            continue;
        }
        EligibleQuery eq;
        eq.id = qid;
        eq.query_row = *qrow;
        for (const std::string& doc : qrels.relevant_docs(qid)) {
            if (auto row = passage_store.row_of(doc)) eq.positive_rows.push_back(*row);
        }
        if (eq.positive_rows.empty()) {
            ++result.skipped_queries;
            continue;
        }
        eligible.push_back(std::move(eq));
    }
    if (eligible.empty()) {
        throw std::runtime_error("no trainable queries: check qrels, rankings and stores");
    }

    const std::size_t batches_per_epoch =
        (eligible.size() + config.batch_size - 1) / config.batch_size;
    const std::size_t steps_per_epoch =
        (batches_per_epoch + config.accum_steps - 1) / config.accum_steps;
    const std::size_t total_steps = steps_per_epoch * config.epochs;

    const std::size_t h = head.input_dim();
    const std::size_t e = head.output_dim();
    AdamW opt_w(h * e, config);
    AdamW opt_b(e, config);

    Rng rng(config.seed);
    std::vector<std::size_t> order(eligible.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> acc_w(h * e, 0.0);
    std::vector<double> acc_b(e, 0.0);
    std::size_t accumulated = 0;
    std::size_t step = 0;

    auto apply_update = [&]() {
        if (accumulated == 0) return;
        double inv = 1.0 / static_cast<double>(accumulated);
        for (double& g : acc_w) g *= inv;
        for (double& g : acc_b) g *= inv;
        ++step;
        double lr = lr_at(config, step, total_steps);
        opt_w.step(head.weights(), acc_w, lr, /*decay=*/true);
        opt_b.step(head.bias(), acc_b, lr, /*decay=*/false);
        std::fill(acc_w.begin(), acc_w.end(), 0.0);
        std::fill(acc_b.begin(), acc_b.end(), 0.0);
        accumulated = 0;
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_batches = 0;

        std::vector<TripleRef> batch;
        batch.reserve(config.batch_size);

        auto flush_batch = [&]() {
            if (batch.empty()) return;
            HeadGradient grad = batch_loss_gradient(head, batch, config.margin);
            if (!std::isfinite(grad.loss)) {
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch + 1) + ", step " +
                                         std::to_string(step + 1));
            }
            for (std::size_t i = 0; i < acc_w.size(); ++i) acc_w[i] += grad.d_weights[i];
            for (std::size_t i = 0; i < acc_b.size(); ++i) acc_b[i] += grad.d_bias[i];
            ++accumulated;
            epoch_loss += grad.loss;
            ++epoch_batches;
            result.triples_seen += batch.size();
            batch.clear();
            if (accumulated == config.accum_steps) apply_update();
        };

        for (std::size_t idx : order) {
            const EligibleQuery& eq = eligible[idx];
            std::size_t pos_row =
                eq.positive_rows[static_cast<std::size_t>(rng.bounded(eq.positive_rows.size()))];
            auto neg_id = sampler.sample(eq.id, rng);
            if (!neg_id) continue;  // pool verified non-empty at eligibility
            auto neg_row = passage_store.row_of(*neg_id);
            if (!neg_row) continue;
            batch.push_back({query_store.row(eq.query_row), passage_store.row(pos_row),
                             passage_store.row(*neg_row)});
            if (batch.size() == config.batch_size) flush_batch();
        }
        flush_batch();
        apply_update();  // epoch boundary flushes a partial accumulation window

        result.epoch_losses.push_back(epoch_batches == 0 ? 0.0 : epoch_loss / epoch_batches);
    }
    result.optimizer_steps = step;
    return result;
}

}  // namespace cort
