#include "bon/retrieval.hpp"

#include <algorithm>

namespace bon {

RetrievalResult finalize_result(std::vector<ScoredPassage> scored, int depth) {
    std::sort(scored.begin(), scored.end(), [](const ScoredPassage& a, const ScoredPassage& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
    if (scored.size() > static_cast<size_t>(depth)) scored.resize(static_cast<size_t>(depth));
    return RetrievalResult{std::move(scored), depth};
}

Rank gold_rank(const RetrievalResult& result, const GoldLabel& gold) {
    for (size_t i = 0; i < result.entries.size(); ++i) {
        if (gold.gold_passage_ids.count(result.entries[i].passage_id))
            return static_cast<int>(i) + 1;
    }
    return std::nullopt;
}

} // namespace bon
