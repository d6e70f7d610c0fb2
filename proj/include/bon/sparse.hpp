#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bon/retrieval.hpp"

namespace bon {

// BM25 term-frequency saturation (k1) and length normalization (b).
struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;

    void validate() const;
};

struct Posting {
    std::uint32_t doc = 0; // slot into the index's id table
    int tf = 0;
};

/**
 * Inverted index with BM25 scoring.
 *
 * IDF uses the Lucene form ln(1 + (N - df + 0.5) / (df + 0.5)), which is
 * never negative. Text is analyzed with lowercase + split on
 * non-alphanumerics (see analyze()). Search results are exact: every
 * matching document is scored and sorted by (score desc, passage_id asc).
 *
 * The index is write-once; after build() it is safe for concurrent
 * read-only searches.
 */
class SparseIndex {
public:
    // Throws DataError on duplicate passage ids (the id is named).
    static SparseIndex build(std::span<const Passage> passages, Bm25Params params = {});

    // BM25 score of a single passage for a pre-analyzed token list. Tokens
    // are consumed in the order given; repeated tokens contribute repeatedly.
    // Throws NotFoundError for an unknown passage id.
    double score(std::span<const std::string> query_tokens, const std::string& passage_id) const;

    // Top-depth passages matching at least one query term. Throws Error on
    // an empty index; a query sharing no terms with the corpus yields an
    // empty result.
    RetrievalResult search(std::string_view query, int depth) const;

    std::size_t doc_count() const { return ids_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    const std::vector<std::string>& passage_ids() const { return ids_; }

    // Document length in tokens. Throws NotFoundError for unknown ids.
    int doc_length(const std::string& passage_id) const;

    // Postings for a term as (passage_id, tf) pairs; empty for unseen terms.
    std::vector<std::pair<std::string, int>> postings(const std::string& term) const;

    void save(const std::filesystem::path& path) const;
    static SparseIndex load(const std::filesystem::path& path);

private:
    double idf(std::size_t df) const;
    double term_score(double idf_value, int tf, int doc_len) const;
    const std::vector<Posting>* find_postings(const std::string& term) const;
    std::uint32_t slot_of(const std::string& passage_id) const;

    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::string> ids_;
    std::vector<int> doc_lengths_;
    std::unordered_map<std::string, std::uint32_t> slot_by_id_;
    double avg_doc_length_ = 0.0;
    Bm25Params params_;
};

// Passage collection IO. JSONL rows are {"passage_id","text"}; TSV rows are
// passage_id <TAB> text. Format chosen by extension (.tsv vs anything else).
std::vector<Passage> read_passages(const std::filesystem::path& path);
void write_passages_jsonl(const std::filesystem::path& path, std::span<const Passage> passages);

} // namespace bon
