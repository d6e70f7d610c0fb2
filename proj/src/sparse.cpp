#include "bon/sparse.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "bon/errors.hpp"
#include "bon/jsonl.hpp"
#include "bon/text.hpp"

namespace bon {

void Bm25Params::validate() const {
    if (!(k1 > 0.0))
        throw ConfigError("bm25: k1 must be > 0, got " + std::to_string(k1));
    if (!(b >= 0.0 && b <= 1.0))
        throw ConfigError("bm25: b must be in [0,1], got " + std::to_string(b));
}

SparseIndex SparseIndex::build(std::span<const Passage> passages, Bm25Params params) {
    params.validate();
    SparseIndex index;
    index.params_ = params;
    long long total_len = 0;
    for (const Passage& p : passages) {
        if (index.slot_by_id_.count(p.passage_id))
            throw DataError("duplicate passage_id '" + p.passage_id + "'");
        std::uint32_t slot = static_cast<std::uint32_t>(index.ids_.size());
        index.slot_by_id_.emplace(p.passage_id, slot);
        index.ids_.push_back(p.passage_id);

        std::vector<std::string> tokens = analyze(p.text);
        index.doc_lengths_.push_back(static_cast<int>(tokens.size()));
        total_len += static_cast<long long>(tokens.size());

        // Count within the document, then append one posting per term.
        std::map<std::string, int> tf;
        for (const std::string& t : tokens) ++tf[t];
        for (const auto& [term, count] : tf)
            index.postings_[term].push_back(Posting{slot, count});
    }
    index.avg_doc_length_ =
        index.ids_.empty() ? 0.0 : static_cast<double>(total_len) / static_cast<double>(index.ids_.size());
    return index;
}

double SparseIndex::idf(std::size_t df) const {
    double n = static_cast<double>(ids_.size());
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double SparseIndex::term_score(double idf_value, int tf, int doc_len) const {
    double tf_d = static_cast<double>(tf);
    double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_len) / avg_doc_length_;
    return idf_value * tf_d * (params_.k1 + 1.0) / (tf_d + params_.k1 * norm);
}

const std::vector<Posting>* SparseIndex::find_postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

std::uint32_t SparseIndex::slot_of(const std::string& passage_id) const {
    auto it = slot_by_id_.find(passage_id);
    if (it == slot_by_id_.end())
        throw NotFoundError("passage_id '" + passage_id + "' not in index");
    return it->second;
}

double SparseIndex::score(std::span<const std::string> query_tokens,
                          const std::string& passage_id) const {
    std::uint32_t slot = slot_of(passage_id);
    double total = 0.0;
    for (const std::string& term : query_tokens) {
        const std::vector<Posting>* plist = find_postings(term);
        if (!plist) continue;
        for (const Posting& p : *plist) {
            if (p.doc == slot) {
                total += term_score(idf(plist->size()), p.tf, doc_lengths_[slot]);
                break;
            }
        }
    }
    return total;
}

RetrievalResult SparseIndex::search(std::string_view query, int depth) const {
    if (ids_.empty()) throw Error("search on an empty sparse index");
    if (depth < 1)
        throw std::invalid_argument("search depth must be >= 1, got " + std::to_string(depth));

    std::vector<std::string> tokens = analyze(query);

    // Term-at-a-time accumulation over matched documents only. Per-document
    // term order equals the query token order, so sums match score().
    std::vector<double> acc(ids_.size(), 0.0);
    std::vector<char> matched(ids_.size(), 0);
    for (const std::string& term : tokens) {
        const std::vector<Posting>* plist = find_postings(term);
        if (!plist) continue;
        double idf_value = idf(plist->size());
        for (const Posting& p : *plist) {
            acc[p.doc] += term_score(idf_value, p.tf, doc_lengths_[p.doc]);
            matched[p.doc] = 1;
        }
    }

    std::vector<ScoredPassage> scored;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (matched[i]) scored.push_back(ScoredPassage{ids_[i], acc[i]});
    }
    return finalize_result(std::move(scored), depth);
}

int SparseIndex::doc_length(const std::string& passage_id) const {
    return doc_lengths_[slot_of(passage_id)];
}

std::vector<std::pair<std::string, int>> SparseIndex::postings(const std::string& term) const {
    std::vector<std::pair<std::string, int>> out;
    if (const std::vector<Posting>* plist = find_postings(term)) {
        out.reserve(plist->size());
        for (const Posting& p : *plist) out.emplace_back(ids_[p.doc], p.tf);
    }
    return out;
}

void SparseIndex::save(const std::filesystem::path& path) const {
    json doc;
    doc["format"] = "sparse_index";
    doc["version"] = 1;
    doc["k1"] = params_.k1;
    doc["b"] = params_.b;
    doc["ids"] = ids_;
    doc["doc_lengths"] = doc_lengths_;
    // Store postings sorted by term for deterministic bytes.
    json terms = json::object();
    std::map<std::string, const std::vector<Posting>*> sorted;
    for (const auto& [term, plist] : postings_) sorted.emplace(term, &plist);
    for (const auto& [term, plist] : sorted) {
        json arr = json::array();
        for (const Posting& p : *plist) arr.push_back({p.doc, p.tf});
        terms[term] = std::move(arr);
    }
    doc["postings"] = std::move(terms);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

SparseIndex SparseIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": invalid sparse index file: " + e.what());
    }
    if (doc.value("format", "") != "sparse_index")
        throw DataError(path.string() + ": not a sparse index file");
    if (doc.value("version", 0) != 1)
        throw DataError(path.string() + ": unsupported sparse index version " +
                        std::to_string(doc.value("version", 0)));

    SparseIndex index;
    index.params_.k1 = doc.at("k1").get<double>();
    index.params_.b = doc.at("b").get<double>();
    index.params_.validate();
    index.ids_ = doc.at("ids").get<std::vector<std::string>>();
    index.doc_lengths_ = doc.at("doc_lengths").get<std::vector<int>>();
    if (index.ids_.size() != index.doc_lengths_.size())
        throw DataError(path.string() + ": ids/doc_lengths size mismatch");
    long long total_len = 0;
    for (std::size_t i = 0; i < index.ids_.size(); ++i) {
        if (!index.slot_by_id_.emplace(index.ids_[i], static_cast<std::uint32_t>(i)).second)
            throw DataError(path.string() + ": duplicate passage_id '" + index.ids_[i] + "'");
        total_len += index.doc_lengths_[i];
    }
    index.avg_doc_length_ = index.ids_.empty()
                                ? 0.0
                                : static_cast<double>(total_len) / static_cast<double>(index.ids_.size());
    for (const auto& [term, arr] : doc.at("postings").items()) {
        std::vector<Posting>& plist = index.postings_[term];
        for (const json& pair : arr) {
            Posting p;
            p.doc = pair.at(0).get<std::uint32_t>();
            p.tf = pair.at(1).get<int>();
            if (p.doc >= index.ids_.size())
                throw DataError(path.string() + ": posting for term '" + term +
                                "' references unknown doc slot");
            plist.push_back(p);
        }
    }
    return index;
}

std::vector<Passage> read_passages(const std::filesystem::path& path) {
    std::vector<Passage> passages;
    std::set<std::string> seen;
    auto add = [&](Passage p, size_t lineno) {
        if (!seen.insert(p.passage_id).second)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": duplicate passage_id '" + p.passage_id + "'");
        passages.push_back(std::move(p));
    };

    if (path.extension() == ".tsv") {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path.string());
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            size_t tab = line.find('\t');
            if (tab == std::string::npos)
                throw DataError(path.string() + ":" + std::to_string(lineno) +
                                ": expected 'passage_id<TAB>text'");
            add(Passage{line.substr(0, tab), line.substr(tab + 1)}, lineno);
        }
        return passages;
    }

    size_t lineno = 0;
    for (const json& j : read_jsonl(path)) {
        ++lineno;
        if (!j.contains("passage_id") || !j.contains("text"))
            throw DataError(path.string() + ": passage record " + std::to_string(lineno) +
                            ": missing 'passage_id' or 'text'");
        add(Passage{j.at("passage_id").get<std::string>(), j.at("text").get<std::string>()},
            lineno);
    }
    return passages;
}

void write_passages_jsonl(const std::filesystem::path& path, std::span<const Passage> passages) {
    std::vector<json> rows;
    rows.reserve(passages.size());
    for (const Passage& p : passages)
        rows.push_back({{"passage_id", p.passage_id}, {"text", p.text}});
    write_jsonl(path, rows);
}

} // namespace bon
