#include "bon/inference.hpp"

#include <algorithm>

#include "bon/errors.hpp"
#include "bon/jsonl.hpp"

namespace bon {

int argmax_lowest_tie(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax of an empty list");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[static_cast<size_t>(i)] > values[static_cast<size_t>(best)]) best = i;
    }
    return best;
}

SelectionStrategy SelectionStrategy::reward_argmax(std::shared_ptr<const RewardModel> model) {
    SelectionStrategy s;
    s.name_ = "reward";
    s.model_ = std::move(model);
    return s;
}

SelectionStrategy SelectionStrategy::oracle(
    std::shared_ptr<const std::map<SessionRef, std::vector<AssessmentRecord>>> assessments) {
    SelectionStrategy s;
    s.name_ = "oracle";
    s.assessments_ = std::move(assessments);
    return s;
}

SelectionStrategy SelectionStrategy::random_choice(std::uint64_t seed) {
    SelectionStrategy s;
    s.name_ = "random";
    s.rng_.seed(seed);
    return s;
}

SelectionStrategy SelectionStrategy::mean_aggregation(
    std::shared_ptr<const QueryEmbedder> embedder) {
    SelectionStrategy s;
    s.name_ = "mean";
    s.embedder_ = std::move(embedder);
    return s;
}

SelectionStrategy SelectionStrategy::first() {
    SelectionStrategy s;
    s.name_ = "first";
    return s;
}

SelectionResult SelectionStrategy::select(const CandidatePool& pool,
                                          const ConversationSession& session, int budget) {
    validate_pool(pool);
    if (budget < 1 || budget > static_cast<int>(pool.size()))
        throw BudgetError("budget " + std::to_string(budget) + " out of range for pool of " +
                          std::to_string(pool.size()) + " candidates");

    SelectionResult result;
    result.budget = budget;
    result.strategy = name_;

    if (name_ == "first") {
        result.chosen_index = 0;
        return result;
    }

    if (name_ == "random") {
        // Unbiased uniform draw via rejection; avoids the
        // implementation-defined std::uniform_int_distribution.
        std::uint64_t n = static_cast<std::uint64_t>(budget);
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t draw;
        do {
            draw = rng_();
        } while (draw >= limit);
        result.chosen_index = static_cast<int>(draw % n);
        return result;
    }

    if (name_ == "reward") {
        if (!model_) throw StrategyError("reward selection requires a loaded model");
        result.scores.reserve(static_cast<size_t>(budget));
        for (int i = 0; i < budget; ++i) {
            EncodedPair pair =
                encode(pool.candidates[static_cast<size_t>(i)], session, model_->encoder);
            result.scores.push_back(score(*model_, pair));
        }
        result.chosen_index = argmax_lowest_tie(result.scores);
        return result;
    }

    if (name_ == "oracle") {
        if (!assessments_) throw StrategyError("oracle selection requires assessment records");
        auto it = assessments_->find(pool.session);
        if (it == assessments_->end())
            throw StrategyError("oracle selection: no assessment records for " +
                                pool.session.key());
        result.scores.assign(static_cast<size_t>(budget), 0.0);
        for (const AssessmentRecord& rec : it->second) {
            if (rec.candidate_index < budget)
                result.scores[static_cast<size_t>(rec.candidate_index)] = rec.fusion_score;
        }
        result.chosen_index = argmax_lowest_tie(result.scores);
        return result;
    }

    if (name_ == "mean") {
        if (!embedder_) throw StrategyError("mean aggregation requires an embedder");
        std::vector<float> mean(static_cast<size_t>(embedder_->dimension()), 0.0f);
        for (int i = 0; i < budget; ++i) {
            std::vector<float> v =
                embedder_->embed(pool.candidates[static_cast<size_t>(i)].standalone_query);
            for (size_t d = 0; d < mean.size(); ++d) mean[d] += v[d];
        }
        for (float& x : mean) x /= static_cast<float>(budget);
        result.chosen_index = SelectionResult::kSyntheticQuery;
        result.synthetic_query = std::move(mean);
        return result;
    }

    throw StrategyError("unknown selection strategy '" + name_ + "'");
}

std::vector<SelectionResult> SelectionStrategy::sweep(const CandidatePool& pool,
                                                      const ConversationSession& session,
                                                      std::span<const int> budgets) {
    for (size_t i = 1; i < budgets.size(); ++i) {
        if (budgets[i] < budgets[i - 1])
            throw BudgetError("budgets must be sorted ascending");
    }
    std::vector<SelectionResult> results;
    results.reserve(budgets.size());
    for (int budget : budgets) results.push_back(select(pool, session, budget));
    return results;
}

void write_selections_jsonl(const std::filesystem::path& path,
                            std::span<const SelectionRow> rows) {
    std::vector<json> out;
    out.reserve(rows.size());
    for (const SelectionRow& row : rows) {
        json j = {{"session_id", row.session.session_id},
                  {"turn_index", row.session.turn_index},
                  {"strategy", row.result.strategy},
                  {"budget", row.result.budget},
                  {"chosen_index", row.result.chosen_index},
                  {"scores", row.result.scores}};
        out.push_back(std::move(j));
    }
    write_jsonl(path, out);
}

std::vector<SelectionRow> read_selections_jsonl(const std::filesystem::path& path) {
    std::vector<SelectionRow> rows;
    size_t lineno = 0;
    for (const json& j : read_jsonl(path)) {
        ++lineno;
        try {
            SelectionRow row;
            row.session.session_id = j.at("session_id").get<std::string>();
            row.session.turn_index = j.at("turn_index").get<int>();
            row.result.strategy = j.at("strategy").get<std::string>();
            row.result.budget = j.at("budget").get<int>();
            row.result.chosen_index = j.at("chosen_index").get<int>();
            row.result.scores = j.value("scores", std::vector<double>{});
            rows.push_back(std::move(row));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": selection record " + std::to_string(lineno) +
                            ": " + e.what());
        }
    }
    return rows;
}

} // namespace bon
