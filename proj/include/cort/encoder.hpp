#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cort/corpus.hpp"

namespace cort {

/// Shared projection head mapping a context vector x (length h) to the final
/// representation tanh(W'x + b) of length e. The same parameters serve
/// passages and queries; the two sides differ only in which context store
/// their inputs come from.
class ProjectionHead {
public:
    ProjectionHead() = default;
    ProjectionHead(std::uint32_t h, std::uint32_t e);

    /// Seeded init: W ~ uniform(-1/sqrt(h), 1/sqrt(h)), b = 0.
    static ProjectionHead init_random(std::uint32_t h, std::uint32_t e, std::uint64_t seed);

    std::uint32_t input_dim() const { return h_; }
    std::uint32_t output_dim() const { return e_; }

    /// tanh(W'x + b); x must have length h. Components lie in (-1, 1).
    std::vector<double> apply(std::span<const float> context) const;
    std::vector<double> apply(std::span<const double> context) const;

    /// Checkpoint format: magic "CORTHEAD", u32 h, u32 e, W row-major f32
    /// little-endian, then b as f32.
    void save(const std::string& path) const;
    static ProjectionHead load(const std::string& path);

    // Parameters are exposed for the optimizer; W is h x e row-major.
    std::vector<double>& weights() { return w_; }
    std::vector<double>& bias() { return b_; }
    const std::vector<double>& weights() const { return w_; }
    const std::vector<double>& bias() const { return b_; }

private:
    std::uint32_t h_ = 0;
    std::uint32_t e_ = 0;
    std::vector<double> w_;  // h * e
    std::vector<double> b_;  // e
};

/// Angular similarity 1 - arccos(cos(u, v)) / pi, mapped to [0, 1].
/// The cosine is clamped to [-1, 1] before arccos so floating-point overshoot
/// on near-parallel vectors cannot produce NaN. Throws on a zero vector.
double angular_similarity(std::span<const double> u, std::span<const double> v);

/// Hinge loss max(0, sim(q, d_neg) - sim(q, d_pos) + margin) over
/// already-projected representations.
double triplet_loss(std::span<const double> q, std::span<const double> d_pos,
                    std::span<const double> d_neg, double margin);

/// One training triple referencing rows of the context stores (length h each).
struct TripleRef {
    const float* query;
    const float* positive;
    const float* negative;
};

/// Batch loss over b triples: for each query every negative in the batch
/// (including its own) and every other query's positive act as negatives:
///
///   L = sum_i [ sum_j hinge(q_i, pos_i, neg_j) + sum_{k != i} hinge(q_i, pos_i, pos_k) ]
///
/// With b = 1 this reduces to the plain triplet loss.
double batch_loss(const ProjectionHead& head, std::span<const TripleRef> triples, double margin);

/// Same loss evaluated over pre-projected representations; used by the
/// training code's oracle tests and by batch_loss internally.
double batch_loss_projected(const std::vector<std::vector<double>>& queries,
                            const std::vector<std::vector<double>>& positives,
                            const std::vector<std::vector<double>>& negatives, double margin);

struct HeadGradient {
    double loss = 0.0;
    std::vector<double> d_weights;  // h * e
    std::vector<double> d_bias;     // e
};

/// Analytic gradient of batch_loss with respect to the head parameters.
/// The hinge subgradient at the kink is 0, so inactive terms contribute
/// nothing; near-parallel pairs (|cos| -> 1) get a zero similarity gradient
/// instead of the unbounded arccos derivative.
HeadGradient batch_loss_gradient(const ProjectionHead& head, std::span<const TripleRef> triples,
                                 double margin);

/// Projects every row of a context store and L2-normalizes it. Rows are unit
/// norm within 1e-6. A row whose projection is exactly the zero vector is
/// rejected with its row index (no direction to normalize).
ContextEmbeddingStore encode_store(const ProjectionHead& head,
                                   const ContextEmbeddingStore& context);

/// Projects and normalizes a single context vector (query encoding path).
std::vector<float> encode_one(const ProjectionHead& head, std::span<const float> context);

}  // namespace cort
