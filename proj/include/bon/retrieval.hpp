#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bon/types.hpp"

namespace bon {

// 1-based rank of a passage in a result list; empty means not retrieved
// within the search depth.
using Rank = std::optional<int>;

struct Passage {
    std::string passage_id;
    std::string text;
};

struct ScoredPassage {
    std::string passage_id;
    double score = 0.0;

    bool operator==(const ScoredPassage&) const = default;
};

// A ranked result list. Entries are sorted by descending score, ties broken
// by ascending passage_id; length never exceeds depth.
struct RetrievalResult {
    std::vector<ScoredPassage> entries;
    int depth = 0;
};

// Sorts scored passages by (score desc, passage_id asc) and truncates to
// depth. Shared by the sparse and dense backends.
RetrievalResult finalize_result(std::vector<ScoredPassage> scored, int depth);

// 1-based rank of the first entry whose passage_id is a gold passage;
// empty if no gold passage appears in the list.
Rank gold_rank(const RetrievalResult& result, const GoldLabel& gold);

} // namespace bon
