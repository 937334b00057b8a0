#include "cort/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <stdexcept>
#include <thread>

#include "cort/io_util.hpp"

namespace cort {

namespace {

constexpr char kIndexMagic[9] = "CORTIDX1";
constexpr char kGraphMagic[9] = "CORTANN1";

bool better(const DenseHit& a, const DenseHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc < b.doc;
}

/// Bounded collector keeping the k best hits; worst sits on top of the heap.
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) {}

    void offer(const DenseHit& hit) {
        if (heap_.size() < k_) {
            heap_.push(hit);
        } else if (better(hit, heap_.top())) {
            heap_.pop();
            heap_.push(hit);
        }
    }

    bool full() const { return heap_.size() >= k_; }
    const DenseHit& worst() const { return heap_.top(); }
    std::size_t size() const { return heap_.size(); }

    std::vector<DenseHit> take_sorted() {
        std::vector<DenseHit> out;
        out.reserve(heap_.size());
        while (!heap_.empty()) {
            out.push_back(heap_.top());
            heap_.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    struct WorseOnTop {
        bool operator()(const DenseHit& a, const DenseHit& b) const { return better(a, b); }
    };
    std::size_t k_;
    std::priority_queue<DenseHit, std::vector<DenseHit>, WorseOnTop> heap_;
};

}  // namespace

double DenseIndex::dot(std::span<const float> query, std::size_t r) const {
    const float* v = row(r);
    double acc = 0.0;
    for (std::uint32_t i = 0; i < dim_; ++i) acc += static_cast<double>(query[i]) * v[i];
    return acc;
}

DenseIndex DenseIndex::build(const ContextEmbeddingStore& representations,
                             std::uint32_t partitions) {
    if (partitions < 1) throw std::invalid_argument("partition count must be >= 1");
    if (representations.count() == 0) throw std::invalid_argument("empty representation store");

    const std::uint32_t dim = representations.dim;
    for (std::size_t r = 0; r < representations.count(); ++r) {
        const float* v = representations.row(r);
        double norm2 = 0.0;
        for (std::uint32_t i = 0; i < dim; ++i) norm2 += static_cast<double>(v[i]) * v[i];
        if (std::abs(std::sqrt(norm2) - 1.0) > 1e-5) {
            throw std::runtime_error("row " + std::to_string(r) +
                                     " is not unit norm; encode the store first");
        }
    }

    DenseIndex index;
    index.dim_ = dim;
    index.partitions_ = partitions;
    index.vectors_ = representations.rows;
    index.ids_ = representations.ids;
    return index;
}

std::pair<std::size_t, std::size_t> DenseIndex::partition_range(std::uint32_t p) const {
    const std::size_t count = size();
    const std::size_t base = count / partitions_;
    const std::size_t extra = count % partitions_;
    // The first `extra` partitions get one more row; sizes differ by <= 1.
    std::size_t first = p * base + std::min<std::size_t>(p, extra);
    std::size_t len = base + (p < extra ? 1 : 0);
    return {first, first + len};
}

std::vector<DenseHit> DenseIndex::search(std::span<const float> query, std::size_t k,
                                         unsigned threads) const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (query.size() != dim_) throw std::invalid_argument("query dim mismatch");

    auto scan_partition = [&](std::uint32_t p) {
        auto [first, last] = partition_range(p);
        TopK top(k);
        for (std::size_t r = first; r < last; ++r) {
            top.offer({static_cast<InternalId>(r), dot(query, r)});
        }
        return top.take_sorted();
    };

    std::vector<std::vector<DenseHit>> per_partition(partitions_);
    if (threads <= 1 || partitions_ == 1) {
        for (std::uint32_t p = 0; p < partitions_; ++p) per_partition[p] = scan_partition(p);
    } else {
        std::vector<std::thread> pool;
        unsigned n_workers = std::min<unsigned>(threads, partitions_);
        for (unsigned w = 0; w < n_workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::uint32_t p = w; p < partitions_; p += n_workers) {
                    per_partition[p] = scan_partition(p);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    // Aggregate the P * k candidates; the merge order is fixed by partition
    // index, so the result is identical for any P and thread count.
    TopK merged(k);
    for (const auto& hits : per_partition) {
        for (const DenseHit& hit : hits) merged.offer(hit);
    }
    return merged.take_sorted();
}

Ranking DenseIndex::search_ranking(const std::string& query_id, std::span<const float> query,
                                   std::size_t k, unsigned threads) const {
    Ranking ranking;
    ranking.query_id = query_id;
    ranking.source = RankSource::kCort;
    for (const DenseHit& hit : search(query, k, threads)) {
        ranking.items.push_back({ids_.external(hit.doc), hit.score});
    }
    return ranking;
}

void DenseIndex::save(const std::string& vec_path, const std::string& id_path) const {
    std::ofstream out(vec_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + vec_path);
    io::write_magic(out, kIndexMagic);
    io::write_u32(out, static_cast<std::uint32_t>(size()));
    io::write_u32(out, dim_);
    io::write_u32(out, partitions_);
    io::write_f32s(out, vectors_.data(), vectors_.size());

    std::ofstream ids(id_path, std::ios::binary);
    if (!ids) throw std::runtime_error("cannot write " + id_path);
    for (std::size_t i = 0; i < size(); ++i) {
        ids << ids_.external(static_cast<InternalId>(i)) << '\n';
    }
}

DenseIndex DenseIndex::load(const std::string& vec_path, const std::string& id_path) {
    std::ifstream in(vec_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + vec_path);
    io::expect_magic(in, kIndexMagic, vec_path);
    std::uint32_t count = io::read_u32(in, "count");
    std::uint32_t dim = io::read_u32(in, "dim");
    std::uint32_t partitions = io::read_u32(in, "partitions");
    if (dim == 0 || partitions == 0) {
        throw std::runtime_error(vec_path + ": corrupt header");
    }
    DenseIndex index;
    index.dim_ = dim;
    index.partitions_ = partitions;
    index.vectors_.resize(static_cast<std::size_t>(count) * dim);
    io::read_f32s(in, index.vectors_.data(), index.vectors_.size(), vec_path);

    std::ifstream ids(id_path);
    if (!ids) throw std::runtime_error("cannot open " + id_path);
    std::string line;
    while (std::getline(ids, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) index.ids_.add(line);
    }
    if (index.ids_.size() != count) {
        throw std::runtime_error(id_path + ": id count does not match vector count");
    }
    return index;
}

// ---------------------------------------------------------------------------
// ANN graph
// ---------------------------------------------------------------------------

namespace {

struct Candidate {
    double dist;
    InternalId node;
};

struct Farther {
    bool operator()(const Candidate& a, const Candidate& b) const {
        if (a.dist != b.dist) return a.dist > b.dist;
        return a.node > b.node;
    }
};

using MinHeap = std::priority_queue<Candidate, std::vector<Candidate>, Farther>;

double node_dist(const DenseIndex& index, std::size_t a, std::size_t b) {
    const float* va = index.row(a);
    std::span<const float> qa(va, index.dim());
    return 1.0 - index.dot(qa, b);
}

// Beam search over the partial graph during construction; returns up to `ef`
// nearest nodes among those inserted so far, sorted by distance.
std::vector<Candidate> beam_search(const DenseIndex& index,
                                   const std::vector<std::vector<InternalId>>& adjacency,
                                   InternalId entry, std::span<const float> query,
                                   std::size_t ef, std::vector<std::uint8_t>& visited_scratch,
                                   std::vector<InternalId>& touched) {
    MinHeap frontier;
    std::priority_queue<Candidate, std::vector<Candidate>,
                        decltype([](const Candidate& a, const Candidate& b) {
                            if (a.dist != b.dist) return a.dist < b.dist;
                            return a.node < b.node;
                        })>
        best;  // worst of the kept set on top

    auto mark = [&](InternalId n) {
        visited_scratch[n] = 1;
        touched.push_back(n);
    };

    double d0 = 1.0 - index.dot(query, entry);
    frontier.push({d0, entry});
    best.push({d0, entry});
    mark(entry);

    while (!frontier.empty()) {
        Candidate current = frontier.top();
        frontier.pop();
        if (best.size() >= ef && current.dist > best.top().dist) break;
        for (InternalId nb : adjacency[current.node]) {
            if (visited_scratch[nb]) continue;
            mark(nb);
            double d = 1.0 - index.dot(query, nb);
            if (best.size() < ef || d < best.top().dist ||
                (d == best.top().dist && nb < best.top().node)) {
                frontier.push({d, nb});
                best.push({d, nb});
                if (best.size() > ef) best.pop();
            }
        }
    }

    std::vector<Candidate> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::reverse(out.begin(), out.end());
    for (InternalId n : touched) visited_scratch[n] = 0;
    touched.clear();
    return out;
}

}  // namespace

AnnGraph AnnGraph::build(const DenseIndex& index, const AnnBuildParams& params) {
    if (params.max_degree < 2) throw std::invalid_argument("max degree must be >= 2");
    const std::size_t n = index.size();
    if (n == 0) throw std::invalid_argument("empty index");

    AnnGraph graph;
    graph.max_degree_ = params.max_degree;
    graph.entry_ = 0;
    graph.adjacency_.assign(n, {});

    const std::size_t ef = std::max<std::size_t>(params.ef_construction, params.max_degree);
    std::vector<std::uint8_t> visited(n, 0);
    std::vector<InternalId> touched;

    // Drops the farthest neighbor when a reverse edge pushes a node over R.
    // `keep` protects one edge from pruning (used by connectivity repair).
    auto prune_to_degree = [&](InternalId node, InternalId keep = kInvalidId) {
        auto& nbrs = graph.adjacency_[node];
        if (nbrs.size() <= graph.max_degree_) return;
        std::size_t worst = nbrs.size();
        double worst_dist = -1.0;
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            if (nbrs[i] == keep) continue;
            double d = node_dist(index, node, nbrs[i]);
            if (worst == nbrs.size() || d > worst_dist ||
                (d == worst_dist && nbrs[i] > nbrs[worst])) {
                worst_dist = d;
                worst = i;
            }
        }
        if (worst < nbrs.size()) {
            nbrs.erase(nbrs.begin() + static_cast<std::ptrdiff_t>(worst));
        }
    };

    for (std::size_t i = 1; i < n; ++i) {
        std::span<const float> q(index.row(i), index.dim());
        std::vector<Candidate> nearest =
            beam_search(index, graph.adjacency_, graph.entry_, q, ef, visited, touched);
        std::size_t links = std::min<std::size_t>(graph.max_degree_, nearest.size());
        for (std::size_t l = 0; l < links; ++l) {
            InternalId target = nearest[l].node;
            graph.adjacency_[i].push_back(target);
            graph.adjacency_[target].push_back(static_cast<InternalId>(i));
            prune_to_degree(target);
        }
    }

    // Reverse-edge pruning can leave a node without in-edges. Reconnect such
    // nodes to their nearest reachable neighbor until a full sweep comes back
    // clean; random data almost never needs more than one round.
    for (int round = 0; round < 64; ++round) {
        std::vector<std::uint8_t> reachable(n, 0);
        std::vector<InternalId> stack = {graph.entry_};
        reachable[graph.entry_] = 1;
        while (!stack.empty()) {
            InternalId u = stack.back();
            stack.pop_back();
            for (InternalId v : graph.adjacency_[u]) {
                if (!reachable[v]) {
                    reachable[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        std::vector<InternalId> orphans;
        for (std::size_t i = 0; i < n; ++i) {
            if (!reachable[i]) orphans.push_back(static_cast<InternalId>(i));
        }
        if (orphans.empty()) break;
        if (round == 63) {
            throw std::runtime_error("graph connectivity repair did not converge");
        }
        for (InternalId v : orphans) {
            InternalId nearest = kInvalidId;
            double nearest_dist = std::numeric_limits<double>::infinity();
            bool nearest_has_room = false;
            for (std::size_t u = 0; u < n; ++u) {
                if (!reachable[u] || u == v) continue;
                double d = node_dist(index, u, v);
                bool has_room = graph.adjacency_[u].size() < graph.max_degree_;
                // Prefer nodes with spare degree so the repair does not
                // cascade into more pruning.
                if (std::make_tuple(!has_room, d, static_cast<InternalId>(u)) <
                    std::make_tuple(!nearest_has_room, nearest_dist, nearest)) {
                    nearest = static_cast<InternalId>(u);
                    nearest_dist = d;
                    nearest_has_room = has_room;
                }
            }
            if (nearest == kInvalidId) continue;
            graph.adjacency_[nearest].push_back(v);
            prune_to_degree(nearest, /*keep=*/v);
            reachable[v] = 1;  // approximate; the next sweep re-verifies
        }
    }
    return graph;
}

bool AnnGraph::is_connected() const {
    const std::size_t n = adjacency_.size();
    if (n == 0) return true;
    std::vector<std::uint8_t> reachable(n, 0);
    std::vector<InternalId> stack = {entry_};
    reachable[entry_] = 1;
    std::size_t seen = 1;
    while (!stack.empty()) {
        InternalId u = stack.back();
        stack.pop_back();
        for (InternalId v : adjacency_[u]) {
            if (!reachable[v]) {
                reachable[v] = 1;
                ++seen;
                stack.push_back(v);
            }
        }
    }
    return seen == n;
}

AnnSearchResult AnnGraph::search(const DenseIndex& index, std::span<const float> query,
                                 std::size_t k, double eps) const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (query.size() != index.dim()) throw std::invalid_argument("query dim mismatch");
    if (adjacency_.size() != index.size()) {
        throw std::invalid_argument("graph does not match index");
    }

    AnnSearchResult result;
    const std::size_t n = index.size();
    std::vector<std::uint8_t> visited(n, 0);

    MinHeap frontier;
    TopK top(k);

    double entry_score = index.dot(query, entry_);
    visited[entry_] = 1;
    result.visited = 1;
    frontier.push({1.0 - entry_score, entry_});
    top.offer({entry_, entry_score});

    auto worst_dist = [&]() { return 1.0 - top.worst().score; };

    while (!frontier.empty()) {
        Candidate current = frontier.top();
        frontier.pop();
        if (top.full() && current.dist > (1.0 + eps) * worst_dist()) break;
        for (InternalId nb : adjacency_[current.node]) {
            if (visited[nb]) continue;
            visited[nb] = 1;
            ++result.visited;
            double score = index.dot(query, nb);
            double d = 1.0 - score;
            if (!top.full() || d <= (1.0 + eps) * worst_dist()) {
                frontier.push({d, nb});
            }
            top.offer({nb, score});
        }
    }
    result.hits = top.take_sorted();
    return result;
}

void AnnGraph::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    io::write_magic(out, kGraphMagic);
    io::write_u32(out, max_degree_);
    for (const auto& nbrs : adjacency_) {
        io::write_u32(out, static_cast<std::uint32_t>(nbrs.size()));
        for (InternalId v : nbrs) io::write_u32(out, v);
    }
}

AnnGraph AnnGraph::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    io::expect_magic(in, kGraphMagic, path);
    AnnGraph graph;
    graph.max_degree_ = io::read_u32(in, "max degree");
    graph.entry_ = 0;
    while (true) {
        std::uint32_t len = 0;
        if (!in.read(reinterpret_cast<char*>(&len), sizeof(len))) break;
        std::vector<InternalId> nbrs(len);
        for (std::uint32_t i = 0; i < len; ++i) nbrs[i] = io::read_u32(in, "neighbor");
        graph.adjacency_.push_back(std::move(nbrs));
    }
    for (const auto& nbrs : graph.adjacency_) {
        for (InternalId v : nbrs) {
            if (v >= graph.adjacency_.size()) {
                throw std::runtime_error(path + ": neighbor id out of range");
            }
        }
    }
    return graph;
}

std::uint64_t estimate_index_size(std::uint64_t count, std::uint64_t e) {
    if (e == 0) throw std::invalid_argument("representation size must be >= 1");
    if (count == 0) return 0;
    constexpr std::uint64_t bytes_per_float = 4;
    if (e > std::numeric_limits<std::uint64_t>::max() / bytes_per_float) {
        throw std::overflow_error("index size overflows");
    }
    std::uint64_t per_doc = e * bytes_per_float;
    if (count > std::numeric_limits<std::uint64_t>::max() / per_doc) {
        throw std::overflow_error("index size overflows");
    }
    return count * per_doc;
}

}  // namespace cort
