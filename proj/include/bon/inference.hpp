#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bon/assessment.hpp"
#include "bon/dense.hpp"
#include "bon/reward.hpp"
#include "bon/types.hpp"

namespace bon {

// Outcome of selecting from one pool under one budget.
struct SelectionResult {
    // Index of the chosen candidate; kSyntheticQuery for mean aggregation,
    // which produces a dense query vector instead of picking a candidate.
    static constexpr int kSyntheticQuery = -1;

    int chosen_index = 0;
    std::vector<double> scores;        // per budgeted candidate, when applicable
    int budget = 0;
    std::vector<float> synthetic_query; // mean aggregation only
    std::string strategy;
};

// Argmax with ties broken toward the lowest index.
int argmax_lowest_tie(std::span<const double> values);

/**
 * Test-time selection over a candidate pool. The budgeted sub-pool is the
 * first N candidates by candidate_index (generation order).
 *
 *   reward : argmax of the reward-model score (Best-of-N)
 *   oracle : highest fusion score per the pool's assessment records
 *   random : uniform draw, deterministic for a fixed seed
 *   mean   : coordinate-wise mean of the candidates' dense query vectors
 *   first  : always candidate 0
 */
class SelectionStrategy {
public:
    static SelectionStrategy reward_argmax(std::shared_ptr<const RewardModel> model);
    static SelectionStrategy oracle(std::shared_ptr<const std::map<SessionRef, std::vector<AssessmentRecord>>> assessments);
    static SelectionStrategy random_choice(std::uint64_t seed);
    static SelectionStrategy mean_aggregation(std::shared_ptr<const QueryEmbedder> embedder);
    static SelectionStrategy first();

    // Throws BudgetError unless 1 <= budget <= pool size, and StrategyError
    // when the strategy's required input is missing.
    SelectionResult select(const CandidatePool& pool, const ConversationSession& session,
                           int budget);

    // One result per budget; budgets must be ascending and within pool size.
    std::vector<SelectionResult> sweep(const CandidatePool& pool,
                                       const ConversationSession& session,
                                       std::span<const int> budgets);

    const std::string& name() const { return name_; }

private:
    SelectionStrategy() = default;

    std::string name_;
    std::shared_ptr<const RewardModel> model_;
    std::shared_ptr<const std::map<SessionRef, std::vector<AssessmentRecord>>> assessments_;
    std::shared_ptr<const QueryEmbedder> embedder_;
    std::mt19937_64 rng_;
};

// Selection JSONL rows:
// {"session_id","turn_index","strategy","budget","chosen_index","scores":[...]}
struct SelectionRow {
    SessionRef session;
    SelectionResult result;
};

void write_selections_jsonl(const std::filesystem::path& path,
                            std::span<const SelectionRow> rows);
std::vector<SelectionRow> read_selections_jsonl(const std::filesystem::path& path);

} // namespace bon
