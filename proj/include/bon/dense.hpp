#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bon/retrieval.hpp"

namespace bon {

/**
 * Flat inner-product index over externally supplied vectors.
 *
 * Search is an exact exhaustive scan: every stored vector is scored, so even
 * zero-score passages appear in the result (ties break by ascending
 * passage_id).
 *
 * On-disk format: one JSON header line {"count":N,"dimension":D,"ids":[...]}
 * terminated by '\n', followed by N*D little-endian 32-bit floats, row-major
 * in ids order.
 */
class DenseIndex {
public:
    // Takes ownership of a flat row-major buffer of ids.size() * dimension
    // floats. Validates uniqueness of ids and finiteness of every component.
    static DenseIndex from_vectors(std::vector<std::string> ids, std::vector<float> data,
                                   int dimension);

    static DenseIndex load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    // Exhaustive top-depth scan by inner product. Throws DimensionError
    // (naming both dimensions) on a query of the wrong length.
    RetrievalResult search(std::span<const float> query_vector, int depth) const;

    int dimension() const { return dimension_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& passage_ids() const { return ids_; }

    // Stored vector for a passage. Throws NotFoundError for unknown ids.
    std::span<const float> vector(const std::string& passage_id) const;

private:
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> slot_by_id_;
    int dimension_ = 0;
};

// Maps query text to a dense vector. assess_pool and mean aggregation use
// this to reach the dense system; the actual encoder is pluggable.
class QueryEmbedder {
public:
    virtual ~QueryEmbedder() = default;
    virtual std::vector<float> embed(std::string_view text) const = 0;
    virtual int dimension() const = 0;
};

// Deterministic hashed bag-of-words embedding, L2-normalized. Pairs with
// passage vectors produced the same way for a fully offline dense backend.
class HashingEmbedder final : public QueryEmbedder {
public:
    explicit HashingEmbedder(int dimension);
    std::vector<float> embed(std::string_view text) const override;
    int dimension() const override { return dimension_; }

private:
    int dimension_;
};

// Embeds each passage's text with the given embedder and builds the index.
DenseIndex embed_passages(std::span<const Passage> passages, const QueryEmbedder& embedder);

} // namespace bon
