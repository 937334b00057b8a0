#include "cort/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "cort/io_util.hpp"
#include "cort/rng.hpp"

namespace cort {

namespace {

constexpr char kHeadMagic[9] = "CORTHEAD";

// Below this, 1 - cos^2 is treated as zero and the arccos derivative is
// suppressed; the clamp region has no useful gradient anyway.
constexpr double kParallelGuard = 1e-12;

double dot(std::span<const double> u, std::span<const double> v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
    return acc;
}

double norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

struct SimGrad {
    double sim = 0.0;
    std::vector<double> du;
    std::vector<double> dv;
};

// sim plus its gradient with respect to both inputs.
SimGrad angular_similarity_grad(std::span<const double> u, std::span<const double> v) {
    SimGrad out;
    const std::size_t e = u.size();
    double nu = norm(u);
    double nv = norm(v);
    if (nu == 0.0 || nv == 0.0) {
        throw std::invalid_argument("angular similarity of a zero vector is undefined");
    }
    double c = dot(u, v) / (nu * nv);
    double clamped = std::clamp(c, -1.0, 1.0);
    out.sim = 1.0 - std::acos(clamped) / std::numbers::pi;
    out.du.assign(e, 0.0);
    out.dv.assign(e, 0.0);
    double one_minus_c2 = 1.0 - clamped * clamped;
    if (one_minus_c2 < kParallelGuard) {
        return out;  // gradient suppressed at the arccos singularity
    }
    double g = 1.0 / (std::numbers::pi * std::sqrt(one_minus_c2));
    for (std::size_t i = 0; i < e; ++i) {
        out.du[i] = g * (v[i] / (nu * nv) - clamped * u[i] / (nu * nu));
        out.dv[i] = g * (u[i] / (nu * nv) - clamped * v[i] / (nv * nv));
    }
    return out;
}

}  // namespace

ProjectionHead::ProjectionHead(std::uint32_t h, std::uint32_t e)
    : h_(h), e_(e), w_(static_cast<std::size_t>(h) * e, 0.0), b_(e, 0.0) {
    if (e == 0) throw std::invalid_argument("representation size must be >= 1");
}

ProjectionHead ProjectionHead::init_random(std::uint32_t h, std::uint32_t e, std::uint64_t seed) {
    ProjectionHead head(h, e);
    Rng rng(seed);
    double bound = 1.0 / std::sqrt(static_cast<double>(h));
    for (double& w : head.w_) w = rng.uniform(-bound, bound);
    return head;
}

template <typename T>
static std::vector<double> apply_impl(std::uint32_t h, std::uint32_t e,
                                      const std::vector<double>& w, const std::vector<double>& b,
                                      std::span<const T> x) {
    if (x.size() != h) {
        throw std::invalid_argument("context vector has length " + std::to_string(x.size()) +
                                    ", head expects " + std::to_string(h));
    }
    std::vector<double> y(b.begin(), b.end());
    for (std::uint32_t i = 0; i < h; ++i) {
        double xi = static_cast<double>(x[i]);
        const double* row = w.data() + static_cast<std::size_t>(i) * e;
        for (std::uint32_t j = 0; j < e; ++j) y[j] += row[j] * xi;
    }
    for (std::uint32_t j = 0; j < e; ++j) y[j] = std::tanh(y[j]);
    return y;
}

std::vector<double> ProjectionHead::apply(std::span<const float> context) const {
    return apply_impl<float>(h_, e_, w_, b_, context);
}

std::vector<double> ProjectionHead::apply(std::span<const double> context) const {
    return apply_impl<double>(h_, e_, w_, b_, context);
}

void ProjectionHead::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    io::write_magic(out, kHeadMagic);
    io::write_u32(out, h_);
    io::write_u32(out, e_);
    for (double w : w_) io::write_f32(out, static_cast<float>(w));
    for (double b : b_) io::write_f32(out, static_cast<float>(b));
}

ProjectionHead ProjectionHead::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    io::expect_magic(in, kHeadMagic, path);
    std::uint32_t h = io::read_u32(in, "h");
    std::uint32_t e = io::read_u32(in, "e");
    ProjectionHead head(h, e);
    std::vector<float> buf(static_cast<std::size_t>(h) * e);
    io::read_f32s(in, buf.data(), buf.size(), path);
    std::copy(buf.begin(), buf.end(), head.w_.begin());
    buf.resize(e);
    io::read_f32s(in, buf.data(), buf.size(), path);
    std::copy(buf.begin(), buf.end(), head.b_.begin());
    return head;
}

double angular_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("similarity of vectors with different lengths");
    }
    double nu = norm(u);
    double nv = norm(v);
    if (nu == 0.0 || nv == 0.0) {
        throw std::invalid_argument("angular similarity of a zero vector is undefined");
    }
    double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
    return 1.0 - std::acos(c) / std::numbers::pi;
}

double triplet_loss(std::span<const double> q, std::span<const double> d_pos,
                    std::span<const double> d_neg, double margin) {
    double sim_pos = angular_similarity(q, d_pos);
    double sim_neg = angular_similarity(q, d_neg);
    return std::max(0.0, sim_neg - sim_pos + margin);
}

double batch_loss_projected(const std::vector<std::vector<double>>& queries,
                            const std::vector<std::vector<double>>& positives,
                            const std::vector<std::vector<double>>& negatives, double margin) {
    const std::size_t b = queries.size();
    if (b == 0) throw std::invalid_argument("empty batch");
    if (positives.size() != b || negatives.size() != b) {
        throw std::invalid_argument("batch sides have different lengths");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        double sim_pos = angular_similarity(queries[i], positives[i]);
        for (std::size_t j = 0; j < b; ++j) {
            double sim_neg = angular_similarity(queries[i], negatives[j]);
            loss += std::max(0.0, sim_neg - sim_pos + margin);
        }
        for (std::size_t k = 0; k < b; ++k) {
            if (k == i) continue;
            double sim_other = angular_similarity(queries[i], positives[k]);
            loss += std::max(0.0, sim_other - sim_pos + margin);
        }
    }
    return loss;
}

double batch_loss(const ProjectionHead& head, std::span<const TripleRef> triples, double margin) {
    const std::size_t b = triples.size();
    if (b == 0) throw std::invalid_argument("empty batch");
    const std::size_t h = head.input_dim();
    std::vector<std::vector<double>> q(b), pos(b), neg(b);
    for (std::size_t i = 0; i < b; ++i) {
        q[i] = head.apply(std::span<const float>(triples[i].query, h));
        pos[i] = head.apply(std::span<const float>(triples[i].positive, h));
        neg[i] = head.apply(std::span<const float>(triples[i].negative, h));
    }
    return batch_loss_projected(q, pos, neg, margin);
}

HeadGradient batch_loss_gradient(const ProjectionHead& head, std::span<const TripleRef> triples,
                                 double margin) {
    const std::size_t b = triples.size();
    if (b == 0) throw std::invalid_argument("empty batch");
    const std::size_t h = head.input_dim();
    const std::size_t e = head.output_dim();

    std::vector<std::vector<double>> q(b), pos(b), neg(b);
    for (std::size_t i = 0; i < b; ++i) {
        q[i] = head.apply(std::span<const float>(triples[i].query, h));
        pos[i] = head.apply(std::span<const float>(triples[i].positive, h));
        neg[i] = head.apply(std::span<const float>(triples[i].negative, h));
    }

    // Upstream gradients with respect to each projected vector.
    std::vector<std::vector<double>> gq(b, std::vector<double>(e, 0.0));
    std::vector<std::vector<double>> gpos(b, std::vector<double>(e, 0.0));
    std::vector<std::vector<double>> gneg(b, std::vector<double>(e, 0.0));

    HeadGradient out;
    out.d_weights.assign(h * e, 0.0);
    out.d_bias.assign(e, 0.0);

    for (std::size_t i = 0; i < b; ++i) {
        SimGrad anchor = angular_similarity_grad(q[i], pos[i]);
        std::size_t active = 0;

        auto visit = [&](const std::vector<double>& other, std::vector<double>& g_other) {
            SimGrad sg = angular_similarity_grad(q[i], other);
            double hinge = sg.sim - anchor.sim + margin;
            if (hinge <= 0.0) return;  // subgradient 0 at the kink
            out.loss += hinge;
            ++active;
            for (std::size_t d = 0; d < e; ++d) {
                gq[i][d] += sg.du[d];
                g_other[d] += sg.dv[d];
            }
        };

        for (std::size_t j = 0; j < b; ++j) visit(neg[j], gneg[j]);
        for (std::size_t k = 0; k < b; ++k) {
            if (k != i) visit(pos[k], gpos[k]);
        }

        if (active > 0) {
            double scale = static_cast<double>(active);
            for (std::size_t d = 0; d < e; ++d) {
                gq[i][d] -= scale * anchor.du[d];
                gpos[i][d] -= scale * anchor.dv[d];
            }
        }
    }

    auto backprop = [&](const float* x, const std::vector<double>& y,
                        const std::vector<double>& gy) {
        for (std::size_t j = 0; j < e; ++j) {
            double dz = gy[j] * (1.0 - y[j] * y[j]);
            if (dz == 0.0) continue;
            out.d_bias[j] += dz;
            for (std::size_t i = 0; i < h; ++i) {
                out.d_weights[i * e + j] += static_cast<double>(x[i]) * dz;
            }
        }
    };

    for (std::size_t i = 0; i < b; ++i) {
        backprop(triples[i].query, q[i], gq[i]);
        backprop(triples[i].positive, pos[i], gpos[i]);
        backprop(triples[i].negative, neg[i], gneg[i]);
    }
    return out;
}

ContextEmbeddingStore encode_store(const ProjectionHead& head,
                                   const ContextEmbeddingStore& context) {
    if (context.dim != head.input_dim()) {
        throw std::invalid_argument("store dim " + std::to_string(context.dim) +
                                    " does not match head input dim " +
                                    std::to_string(head.input_dim()));
    }
    ContextEmbeddingStore out;
    out.dim = head.output_dim();
    out.kind = context.kind;
    out.ids = context.ids;
    out.rows.resize(context.count() * out.dim);
    for (std::size_t r = 0; r < context.count(); ++r) {
        std::vector<double> y = head.apply(std::span<const float>(context.row(r), context.dim));
        double n = norm(y);
        if (n == 0.0) {
            throw std::runtime_error("projection of row " + std::to_string(r) +
                                     " is the zero vector; cannot normalize");
        }
        float* dst = out.rows.data() + r * out.dim;
        for (std::size_t j = 0; j < y.size(); ++j) {
            dst[j] = static_cast<float>(y[j] / n);
        }
    }
    return out;
}

std::vector<float> encode_one(const ProjectionHead& head, std::span<const float> context) {
    std::vector<double> y = head.apply(context);
    double n = norm(y);
    if (n == 0.0) {
        throw std::runtime_error("projection is the zero vector; cannot normalize");
    }
    std::vector<float> out(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) out[j] = static_cast<float>(y[j] / n);
    return out;
}

}  // namespace cort
