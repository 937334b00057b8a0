#include "cort/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cort/io_util.hpp"
#include "cort/tokenizer.hpp"

namespace cort {

namespace {

constexpr char kIndexMagic[9] = "CORTBM25";
constexpr std::uint32_t kIndexVersion = 1;

// Plain suffix stripper (s-stemmer). Deliberately mild; off by default.
std::string stem_term(const std::string& term) {
    auto ends_with = [&](const char* suffix) {
        std::size_t n = std::char_traits<char>::length(suffix);
        return term.size() > n + 2 && term.compare(term.size() - n, n, suffix) == 0;
    };
    if (ends_with("ies")) return term.substr(0, term.size() - 3) + "y";
    if (ends_with("sses")) return term.substr(0, term.size() - 2);
    if (term.size() > 3 && term.back() == 's' && term[term.size() - 2] != 's' &&
        term[term.size() - 2] != 'u') {
        return term.substr(0, term.size() - 1);
    }
    return term;
}

}  // namespace

const std::unordered_set<std::string>& english_stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",  "an", "and", "are", "as", "at",  "be", "but", "by",   "for", "if",  "in",
        "is", "it", "no",  "not", "of", "on",  "or", "s",   "such", "t",   "that", "the",
        "their", "then", "there", "these", "they", "this", "to", "was", "will", "with"};
    return words;
}

std::vector<std::string> analyze(const std::string& text, const Bm25Params& params) {
    std::vector<std::string> terms = tokenize(text);
    if (params.remove_stopwords) {
        const auto& stop = english_stopwords();
        std::erase_if(terms, [&](const std::string& t) { return stop.count(t) > 0; });
    }
    if (params.stem) {
        for (auto& t : terms) t = stem_term(t);
    }
    return terms;
}

InvertedIndex InvertedIndex::build(const Corpus& corpus, const Bm25Params& params) {
    if (corpus.size() == 0) {
        throw std::runtime_error("cannot build index from empty corpus");
    }
    InvertedIndex index;
    index.params_ = params;
    index.ids_ = corpus.ids;
    index.doc_lengths_.resize(corpus.size(), 0);

    std::uint64_t total_len = 0;
    std::unordered_map<std::string, std::uint32_t> tf;
    for (std::size_t doc = 0; doc < corpus.size(); ++doc) {
        std::vector<std::string> terms = analyze(corpus.texts[doc], params);
        index.doc_lengths_[doc] = static_cast<std::uint32_t>(terms.size());
        total_len += terms.size();
        tf.clear();
        for (const auto& t : terms) ++tf[t];
        for (const auto& [term, freq] : tf) {
            index.postings_[term].push_back({static_cast<InternalId>(doc), freq});
        }
    }
    if (total_len == 0) {
        throw std::runtime_error("cannot build index: every document tokenizes to nothing");
    }
    index.avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(corpus.size());
    // Postings are appended in doc order, so they are already sorted by doc id.
    return index;
}

double InvertedIndex::idf(std::size_t df) const {
    double n = static_cast<double>(doc_count());
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

std::vector<std::pair<InternalId, double>> InvertedIndex::score_all(
    const std::string& query_text) const {
    std::vector<std::string> terms = analyze(query_text, params_);
    std::unordered_map<InternalId, double> acc;
    const double k1 = params_.k1;
    const double b = params_.b;
    for (const auto& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& list = it->second;
        double w = idf(list.size());
        for (const Posting& p : list) {
            double dl = doc_lengths_[p.doc];
            double norm = p.tf + k1 * (1.0 - b + b * dl / avg_doc_len_);
            acc[p.doc] += w * (p.tf * (k1 + 1.0)) / norm;
        }
    }
    std::vector<std::pair<InternalId, double>> scored(acc.begin(), acc.end());
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    return scored;
}

Ranking InvertedIndex::search(const std::string& query_id, const std::string& query_text,
                              std::size_t k) const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    Ranking ranking;
    ranking.query_id = query_id;
    ranking.source = RankSource::kBm25;
    std::vector<std::pair<InternalId, double>> scored = score_all(query_text);
    if (scored.size() > k) scored.resize(k);
    ranking.items.reserve(scored.size());
    for (const auto& [doc, score] : scored) {
        ranking.items.push_back({ids_.external(doc), score});
    }
    return ranking;
}

void InvertedIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    io::write_magic(out, kIndexMagic);
    io::write_u32(out, kIndexVersion);
    std::uint32_t flags = (params_.remove_stopwords ? 1u : 0u) | (params_.stem ? 2u : 0u);
    io::write_u32(out, flags);
    io::write_f32(out, params_.k1);
    io::write_f32(out, params_.b);
    io::write_u32(out, static_cast<std::uint32_t>(doc_count()));
    out.write(reinterpret_cast<const char*>(doc_lengths_.data()),
              static_cast<std::streamsize>(doc_lengths_.size() * sizeof(std::uint32_t)));
    for (std::size_t i = 0; i < doc_count(); ++i) {
        const std::string& id = ids_.external(static_cast<InternalId>(i));
        io::write_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }

    // Terms serialized in lexicographic order so rebuilds are byte-identical.
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });

    io::write_u32(out, static_cast<std::uint32_t>(terms.size()));
    for (const std::string* term : terms) {
        io::write_u32(out, static_cast<std::uint32_t>(term->size()));
        out.write(term->data(), static_cast<std::streamsize>(term->size()));
        const auto& list = postings_.at(*term);
        io::write_u32(out, static_cast<std::uint32_t>(list.size()));
        for (const Posting& p : list) {
            io::write_u32(out, p.doc);
            io::write_u32(out, p.tf);
        }
    }
}

InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    io::expect_magic(in, kIndexMagic, path);
    std::uint32_t version = io::read_u32(in, "version");
    if (version != kIndexVersion) {
        throw std::runtime_error(path + ": unsupported index version " + std::to_string(version));
    }
    InvertedIndex index;
    std::uint32_t flags = io::read_u32(in, "flags");
    index.params_.remove_stopwords = (flags & 1u) != 0;
    index.params_.stem = (flags & 2u) != 0;
    float k1 = 0, b = 0;
    in.read(reinterpret_cast<char*>(&k1), sizeof(k1));
    in.read(reinterpret_cast<char*>(&b), sizeof(b));
    if (!in) throw std::runtime_error(path + ": truncated header");
    index.params_.k1 = k1;
    index.params_.b = b;

    std::uint32_t n = io::read_u32(in, "doc count");
    index.doc_lengths_.resize(n);
    in.read(reinterpret_cast<char*>(index.doc_lengths_.data()),
            static_cast<std::streamsize>(n * sizeof(std::uint32_t)));
    if (!in) throw std::runtime_error(path + ": truncated doc lengths");

    std::uint64_t total_len = 0;
    for (std::uint32_t len : index.doc_lengths_) total_len += len;
    index.avg_doc_len_ = n == 0 ? 0.0 : static_cast<double>(total_len) / n;

    std::string buf;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint32_t len = io::read_u32(in, "id length");
        buf.resize(len);
        in.read(buf.data(), len);
        if (!in) throw std::runtime_error(path + ": truncated id table");
        index.ids_.add(buf);
    }

    std::uint32_t term_count = io::read_u32(in, "term count");
    for (std::uint32_t t = 0; t < term_count; ++t) {
        std::uint32_t len = io::read_u32(in, "term length");
        buf.resize(len);
        in.read(buf.data(), len);
        if (!in) throw std::runtime_error(path + ": truncated term table");
        std::uint32_t df = io::read_u32(in, "df");
        std::vector<Posting> list(df);
        for (std::uint32_t p = 0; p < df; ++p) {
            list[p].doc = io::read_u32(in, "posting doc");
            list[p].tf = io::read_u32(in, "posting tf");
        }
        index.postings_.emplace(buf, std::move(list));
    }
    return index;
}

}  // namespace cort
