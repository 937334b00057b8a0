#include "cort/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cort/io_util.hpp"

namespace cort {

namespace {

constexpr char kEmbeddingMagic[9] = "CORTEMB1";

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::ifstream open_or_throw(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return in;
}

}  // namespace

void Qrels::add(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0 || grade > 3) {
        throw std::runtime_error("qrels grade out of range 0..3: " + std::to_string(grade));
    }
    auto [it, inserted] = entries_[query_id].emplace(doc_id, grade);
    if (!inserted) {
        it->second = std::max(it->second, grade);
    } else {
        ++entry_count_;
    }
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
    auto qit = entries_.find(query_id);
    if (qit == entries_.end()) return 0;
    auto dit = qit->second.find(doc_id);
    return dit == qit->second.end() ? 0 : dit->second;
}

std::vector<std::string> Qrels::relevant_docs(const std::string& query_id, int min_grade) const {
    std::vector<std::string> out;
    auto qit = entries_.find(query_id);
    if (qit == entries_.end()) return out;
    for (const auto& [doc, grade] : qit->second) {
        if (grade >= min_grade) out.push_back(doc);
    }
    std::sort(out.begin(), out.end());
    return out;
}

const std::unordered_map<std::string, int>* Qrels::docs_for(const std::string& query_id) const {
    auto qit = entries_.find(query_id);
    return qit == entries_.end() ? nullptr : &qit->second;
}

std::vector<std::string> Qrels::query_ids_sorted() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [qid, _] : entries_) out.push_back(qid);
    std::sort(out.begin(), out.end());
    return out;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": malformed line, expected id<TAB>text");
        }
        std::string id = line.substr(0, tab);
        std::string text = line.substr(tab + 1);
        if (trim(text).empty()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": empty text for id " + id);
        }
        try {
            corpus.ids.add(id);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        corpus.texts.push_back(std::move(text));
    }
    return corpus;
}

void write_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        out << corpus.ids.external(static_cast<InternalId>(i)) << '\t' << corpus.texts[i] << '\n';
    }
}

Qrels load_qrels(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::istringstream fields(line);
        std::string qid, ignored, pid;
        long grade = 0;
        if (!(fields >> qid >> ignored >> pid >> grade)) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": malformed qrels line");
        }
        if (grade < 0) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": negative grade");
        }
        qrels.add(qid, pid, static_cast<int>(grade));
    }
    return qrels;
}

ContextEmbeddingStore load_embeddings(const std::string& vec_path, const std::string& id_path,
                                      StoreKind kind) {
    std::ifstream in = open_or_throw(vec_path, std::ios::in | std::ios::binary);
    io::expect_magic(in, kEmbeddingMagic, vec_path);
    std::uint32_t count = io::read_u32(in, "row count");
    std::uint32_t dim = io::read_u32(in, "dim");
    if (dim == 0) {
        throw std::runtime_error(vec_path + ": dim must be positive");
    }

    in.seekg(0, std::ios::end);
    std::uint64_t file_size = static_cast<std::uint64_t>(in.tellg());
    std::uint64_t expected = 16ull + static_cast<std::uint64_t>(count) * dim * 4ull;
    if (file_size != expected) {
        throw std::runtime_error(vec_path + ": size mismatch, header implies " +
                                 std::to_string(expected) + " bytes but file has " +
                                 std::to_string(file_size));
    }
    in.seekg(16, std::ios::beg);

    ContextEmbeddingStore store;
    store.dim = dim;
    store.kind = kind;
    store.rows.resize(static_cast<std::size_t>(count) * dim);
    io::read_f32s(in, store.rows.data(), store.rows.size(), vec_path);

    for (std::uint32_t r = 0; r < count; ++r) {
        const float* row = store.rows.data() + static_cast<std::size_t>(r) * dim;
        for (std::uint32_t c = 0; c < dim; ++c) {
            if (!std::isfinite(row[c])) {
                throw std::runtime_error(vec_path + ": non-finite value at row " +
                                         std::to_string(r));
            }
        }
    }

    std::ifstream ids = open_or_throw(id_path);
    std::string line;
    std::size_t id_lines = 0;
    while (std::getline(ids, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        store.ids.add(line);
        ++id_lines;
    }
    if (id_lines != count) {
        throw std::runtime_error(id_path + ": has " + std::to_string(id_lines) +
                                 " ids but vector file has " + std::to_string(count) + " rows");
    }
    return store;
}

void write_embeddings(const std::string& vec_path, const std::string& id_path,
                      const ContextEmbeddingStore& store) {
    std::ofstream out(vec_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + vec_path);
    io::write_magic(out, kEmbeddingMagic);
    io::write_u32(out, static_cast<std::uint32_t>(store.count()));
    io::write_u32(out, store.dim);
    io::write_f32s(out, store.rows.data(), store.rows.size());

    std::ofstream ids(id_path, std::ios::binary);
    if (!ids) throw std::runtime_error("cannot write " + id_path);
    for (std::size_t i = 0; i < store.count(); ++i) {
        ids << store.ids.external(static_cast<InternalId>(i)) << '\n';
    }
}

}  // namespace cort
