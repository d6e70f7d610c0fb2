#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bon {

// Token budget for a rewrite used on its own as the retrieval query.
inline constexpr int kRewriteTokenCap = 32;
// Token budget for the concatenated rewrite + pseudo-response query.
inline constexpr int kStandaloneTokenCap = 256;

// One conversation turn. `response` is empty for the current, unanswered turn.
struct Turn {
    std::string query;
    std::string response;

    bool operator==(const Turn&) const = default;
};

// Identifies one assessed turn of one conversation.
struct SessionRef {
    std::string session_id;
    int turn_index = 1;

    // Key used for query ids in runs/qrels and for map lookups.
    std::string key() const { return session_id + "_" + std::to_string(turn_index); }

    bool operator==(const SessionRef&) const = default;
    auto operator<=>(const SessionRef&) const = default;
};

// The current query plus its historical context, as one dataset row.
struct ConversationSession {
    std::string session_id;
    int turn_index = 1;                 // 1-based; history holds turn_index - 1 turns
    std::vector<Turn> history;
    std::string current_query;

    SessionRef ref() const { return SessionRef{session_id, turn_index}; }

    bool operator==(const ConversationSession&) const = default;
};

// Throws DataError if the session violates its invariants
// (turn_index >= 1, history length == turn_index - 1, non-blank queries).
void validate_session(const ConversationSession& session);

// One generated reformulation: the rewrite, the pseudo-response, and the
// standalone query used for retrieval.
struct ReformulationCandidate {
    std::string rewrite;
    std::string pseudo_response;
    std::string standalone_query;
    int candidate_index = 0;
    long long generation_seed = 0;

    bool operator==(const ReformulationCandidate&) const = default;
};

// All candidates generated for one session turn.
struct CandidatePool {
    SessionRef session;
    std::vector<ReformulationCandidate> candidates;
    // Request indices dropped during generation (unparseable after retries).
    // Not serialized; kept so callers can audit pool shrinkage.
    std::vector<int> dropped_requests;

    size_t size() const { return candidates.size(); }
};

// Throws DataError on gaps in candidate_index or an empty pool.
void validate_pool(const CandidatePool& pool);

// Gold relevance for one session turn.
struct GoldLabel {
    SessionRef session;
    std::set<std::string> gold_passage_ids;
    std::map<std::string, int> graded_relevance;
};

// Joins rewrite and pseudo-response with a single space; an empty
// pseudo-response leaves the rewrite unchanged. Throws on a blank rewrite.
std::string concat_standalone(std::string_view rewrite, std::string_view pseudo_response);

// Keeps the first max_tokens whitespace tokens, rejoined by single spaces.
// Inputs at or under the limit pass through unchanged.
std::string truncate_query(std::string_view text, int max_tokens);

// Builds a candidate: standalone_query = truncate(concat(rewrite, response)).
ReformulationCandidate make_candidate(std::string rewrite, std::string pseudo_response,
                                      int candidate_index, long long generation_seed,
                                      int max_tokens = kStandaloneTokenCap);

} // namespace bon
