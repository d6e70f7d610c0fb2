#include "bon/assessment.hpp"

#include <algorithm>
#include <numeric>

#include "bon/errors.hpp"
#include "bon/jsonl.hpp"

namespace bon {

namespace {

double reciprocal(Rank rank) {
    if (!rank.has_value()) return 0.0;
    if (*rank < 1)
        throw std::invalid_argument("rank must be a positive integer, got " +
                                    std::to_string(*rank));
    return 1.0 / static_cast<double>(*rank);
}

} // namespace

double fusion_score(Rank sparse_rank, Rank dense_rank) {
    return reciprocal(sparse_rank) + reciprocal(dense_rank);
}

std::vector<AssessmentRecord> assess_pool(const CandidatePool& pool, const SparseIndex& sparse,
                                          const DenseIndex& dense, const QueryEmbedder& embedder,
                                          const GoldLabel& gold, int depth) {
    validate_pool(pool);
    if (gold.session != pool.session)
        throw Error("assessment: gold label is for " + gold.session.key() +
                    " but pool is for " + pool.session.key());

    std::vector<AssessmentRecord> records(pool.candidates.size());
    for (size_t i = 0; i < pool.candidates.size(); ++i) {
        const ReformulationCandidate& cand = pool.candidates[i];
        AssessmentRecord& rec = records[i];
        rec.candidate_index = cand.candidate_index;
        rec.sparse_rank = gold_rank(sparse.search(cand.standalone_query, depth), gold);
        std::vector<float> query_vector;
        try {
            query_vector = embedder.embed(cand.standalone_query);
        } catch (const std::exception& e) {
            throw Error("assessment of " + pool.session.key() + " candidate " +
                        std::to_string(cand.candidate_index) + ": embedder failed: " + e.what());
        }
        rec.dense_rank = gold_rank(dense.search(query_vector, depth), gold);
        rec.fusion_score = fusion_score(rec.sparse_rank, rec.dense_rank);
    }
    assign_ranks(records);
    return records;
}

void assign_ranks(std::vector<AssessmentRecord>& records) {
    std::vector<size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (records[a].fusion_score != records[b].fusion_score)
            return records[a].fusion_score > records[b].fusion_score;
        return records[a].candidate_index < records[b].candidate_index;
    });
    for (size_t pos = 0; pos < order.size(); ++pos)
        records[order[pos]].assigned_rank = static_cast<int>(pos) + 1;
}

int oracle_best(std::span<const AssessmentRecord> records) {
    if (records.empty()) throw Error("oracle_best: no assessment records");
    for (const AssessmentRecord& rec : records) {
        if (rec.assigned_rank == 1) return rec.candidate_index;
    }
    throw Error("oracle_best: no record has assigned_rank 1");
}

namespace {

json rank_to_json(Rank r) {
    if (!r.has_value()) return nullptr;
    return *r;
}

Rank rank_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<int>();
}

} // namespace

void write_assessments_jsonl(const std::filesystem::path& path,
                             std::span<const AssessedPool> pools) {
    std::vector<json> rows;
    rows.reserve(pools.size());
    for (const AssessedPool& pool : pools) {
        json records = json::array();
        for (const AssessmentRecord& rec : pool.records) {
            records.push_back({{"candidate_index", rec.candidate_index},
                               {"sparse_rank", rank_to_json(rec.sparse_rank)},
                               {"dense_rank", rank_to_json(rec.dense_rank)},
                               {"fusion_score", rec.fusion_score},
                               {"assigned_rank", rec.assigned_rank}});
        }
        rows.push_back({{"session_id", pool.session.session_id},
                        {"turn_index", pool.session.turn_index},
                        {"records", std::move(records)}});
    }
    write_jsonl(path, rows);
}

std::vector<AssessedPool> read_assessments_jsonl(const std::filesystem::path& path) {
    std::vector<AssessedPool> pools;
    size_t row_index = 0;
    for (const json& j : read_jsonl(path)) {
        ++row_index;
        try {
            AssessedPool pool;
            pool.session.session_id = j.at("session_id").get<std::string>();
            pool.session.turn_index = j.at("turn_index").get<int>();
            for (const json& r : j.at("records")) {
                AssessmentRecord rec;
                rec.candidate_index = r.at("candidate_index").get<int>();
                rec.sparse_rank = rank_from_json(r.at("sparse_rank"));
                rec.dense_rank = rank_from_json(r.at("dense_rank"));
                rec.fusion_score = r.at("fusion_score").get<double>();
                rec.assigned_rank = r.at("assigned_rank").get<int>();
                pool.records.push_back(rec);
            }
            pools.push_back(std::move(pool));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": assessment record " + std::to_string(row_index) +
                            ": " + e.what());
        }
    }
    return pools;
}

} // namespace bon
