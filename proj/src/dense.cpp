#include "bon/dense.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "bon/errors.hpp"
#include "bon/text.hpp"

static_assert(std::endian::native == std::endian::little,
              "vector file IO assumes a little-endian host");

namespace bon {

using json = nlohmann::json;

DenseIndex DenseIndex::from_vectors(std::vector<std::string> ids, std::vector<float> data,
                                    int dimension) {
    if (dimension < 1)
        throw DimensionError("dense index dimension must be >= 1, got " +
                             std::to_string(dimension));
    if (data.size() != ids.size() * static_cast<std::size_t>(dimension))
        throw DataError("dense index: " + std::to_string(ids.size()) + " ids x dimension " +
                        std::to_string(dimension) + " != " + std::to_string(data.size()) +
                        " floats");
    for (float v : data) {
        if (!std::isfinite(v)) throw DataError("dense index: non-finite vector component");
    }
    DenseIndex index;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!index.slot_by_id_.emplace(ids[i], i).second)
            throw DataError("dense index: duplicate passage_id '" + ids[i] + "'");
    }
    index.ids_ = std::move(ids);
    index.data_ = std::move(data);
    index.dimension_ = dimension;
    return index;
}

RetrievalResult DenseIndex::search(std::span<const float> query_vector, int depth) const {
    if (static_cast<int>(query_vector.size()) != dimension_)
        throw DimensionError("query vector dimension " + std::to_string(query_vector.size()) +
                             " != index dimension " + std::to_string(dimension_));
    if (depth < 1)
        throw std::invalid_argument("search depth must be >= 1, got " + std::to_string(depth));

    std::vector<ScoredPassage> scored;
    scored.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const float* row = data_.data() + i * static_cast<std::size_t>(dimension_);
        double dot = 0.0;
        for (int d = 0; d < dimension_; ++d)
            dot += static_cast<double>(row[d]) * static_cast<double>(query_vector[d]);
        scored.push_back(ScoredPassage{ids_[i], dot});
    }
    return finalize_result(std::move(scored), depth);
}

std::span<const float> DenseIndex::vector(const std::string& passage_id) const {
    auto it = slot_by_id_.find(passage_id);
    if (it == slot_by_id_.end())
        throw NotFoundError("passage_id '" + passage_id + "' not in dense index");
    return {data_.data() + it->second * static_cast<std::size_t>(dimension_),
            static_cast<std::size_t>(dimension_)};
}

void DenseIndex::save(const std::filesystem::path& path) const {
    json header = {{"count", ids_.size()}, {"dimension", dimension_}, {"ids", ids_}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(data_.data()),
              static_cast<std::streamsize>(data_.size() * sizeof(float)));
    if (!out) throw IoError("write failed for " + path.string());
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string header_line;
    if (!std::getline(in, header_line))
        throw DataError(path.string() + ": missing vector file header");
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded())
        throw DataError(path.string() + ": vector file header is not valid JSON");

    std::size_t count = header.at("count").get<std::size_t>();
    int dimension = header.at("dimension").get<int>();
    std::vector<std::string> ids = header.at("ids").get<std::vector<std::string>>();
    if (ids.size() != count)
        throw DataError(path.string() + ": header count " + std::to_string(count) + " != " +
                        std::to_string(ids.size()) + " ids");

    std::vector<float> data(count * static_cast<std::size_t>(dimension));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != data.size() * sizeof(float))
        throw DataError(path.string() + ": truncated vector block, expected " +
                        std::to_string(data.size() * sizeof(float)) + " bytes, got " +
                        std::to_string(in.gcount()));
    return from_vectors(std::move(ids), std::move(data), dimension);
}

HashingEmbedder::HashingEmbedder(int dimension) : dimension_(dimension) {
    if (dimension < 1)
        throw ConfigError("hashing embedder dimension must be >= 1, got " +
                          std::to_string(dimension));
}

std::vector<float> HashingEmbedder::embed(std::string_view text) const {
    std::vector<float> v(static_cast<std::size_t>(dimension_), 0.0f);
    for (const std::string& token : analyze(text)) {
        std::size_t bin = static_cast<std::size_t>(fnv1a64(token) %
                                                   static_cast<std::uint64_t>(dimension_));
        v[bin] += 1.0f;
    }
    double norm_sq = 0.0;
    for (float x : v) norm_sq += static_cast<double>(x) * static_cast<double>(x);
    if (norm_sq > 0.0) {
        float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
        for (float& x : v) x *= inv;
    }
    return v;
}

DenseIndex embed_passages(std::span<const Passage> passages, const QueryEmbedder& embedder) {
    std::vector<std::string> ids;
    std::vector<float> data;
    ids.reserve(passages.size());
    data.reserve(passages.size() * static_cast<std::size_t>(embedder.dimension()));
    for (const Passage& p : passages) {
        ids.push_back(p.passage_id);
        std::vector<float> v = embedder.embed(p.text);
        data.insert(data.end(), v.begin(), v.end());
    }
    return DenseIndex::from_vectors(std::move(ids), std::move(data), embedder.dimension());
}

} // namespace bon
