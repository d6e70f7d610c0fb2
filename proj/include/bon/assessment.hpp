#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "bon/dense.hpp"
#include "bon/sparse.hpp"
#include "bon/types.hpp"

namespace bon {

// Depth used for gold-rank lookup during assessment and run building.
inline constexpr int kDefaultAssessmentDepth = 100;

// End-to-end outcome for one candidate: gold-passage ranks in both systems,
// the reciprocal-rank fusion score, and the label rank within the pool.
struct AssessmentRecord {
    int candidate_index = 0;
    Rank sparse_rank;
    Rank dense_rank;
    double fusion_score = 0.0;
    int assigned_rank = 0; // 1 = best in pool

    bool operator==(const AssessmentRecord&) const = default;
};

// 1/sparse_rank + 1/dense_rank; a missing rank contributes 0, so the score
// lies in [0, 2]. Throws on a non-positive rank.
double fusion_score(Rank sparse_rank, Rank dense_rank);

// Fills assigned_rank with 1..n by descending fusion score; equal scores
// break toward the lower candidate_index.
void assign_ranks(std::vector<AssessmentRecord>& records);

// Retrieves every candidate through both systems, fuses the gold ranks, and
// assigns ranks 1..n by descending fusion score (ties by ascending
// candidate_index). Output is ordered by candidate_index.
std::vector<AssessmentRecord> assess_pool(const CandidatePool& pool, const SparseIndex& sparse,
                                          const DenseIndex& dense, const QueryEmbedder& embedder,
                                          const GoldLabel& gold,
                                          int depth = kDefaultAssessmentDepth);

// candidate_index of the record holding assigned_rank 1.
int oracle_best(std::span<const AssessmentRecord> records);

// Assessment JSONL rows:
// {"session_id","turn_index","records":[{"candidate_index","sparse_rank",
//  "dense_rank","fusion_score","assigned_rank"}...]}
// A missing rank serializes as null.
struct AssessedPool {
    SessionRef session;
    std::vector<AssessmentRecord> records;
};

void write_assessments_jsonl(const std::filesystem::path& path,
                             std::span<const AssessedPool> pools);
std::vector<AssessedPool> read_assessments_jsonl(const std::filesystem::path& path);

} // namespace bon
