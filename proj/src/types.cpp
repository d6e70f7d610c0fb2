#include "bon/types.hpp"

#include "bon/errors.hpp"
#include "bon/text.hpp"

namespace bon {

void validate_session(const ConversationSession& session) {
    if (session.session_id.empty())
        throw DataError("session has empty session_id");
    if (session.turn_index < 1)
        throw DataError("session '" + session.session_id + "': turn_index must be >= 1, got " +
                        std::to_string(session.turn_index));
    if (session.history.size() != static_cast<size_t>(session.turn_index - 1))
        throw DataError("session '" + session.session_id + "': history length " +
                        std::to_string(session.history.size()) + " != turn_index - 1 (" +
                        std::to_string(session.turn_index - 1) + ")");
    if (is_blank(session.current_query))
        throw DataError("session '" + session.session_id + "': current_query is blank");
    for (size_t i = 0; i < session.history.size(); ++i) {
        if (is_blank(session.history[i].query))
            throw DataError("session '" + session.session_id + "': history turn " +
                            std::to_string(i + 1) + " has a blank query");
    }
}

void validate_pool(const CandidatePool& pool) {
    if (pool.candidates.empty())
        throw DataError("candidate pool for " + pool.session.key() + " is empty");
    for (size_t i = 0; i < pool.candidates.size(); ++i) {
        if (pool.candidates[i].candidate_index != static_cast<int>(i))
            throw DataError("candidate pool for " + pool.session.key() +
                            ": candidate_index at position " + std::to_string(i) + " is " +
                            std::to_string(pool.candidates[i].candidate_index) +
                            " (must be contiguous from 0)");
        if (is_blank(pool.candidates[i].rewrite))
            throw DataError("candidate pool for " + pool.session.key() + ": candidate " +
                            std::to_string(i) + " has a blank rewrite");
    }
}

std::string concat_standalone(std::string_view rewrite, std::string_view pseudo_response) {
    if (is_blank(rewrite))
        throw DataError("invalid candidate: rewrite is empty");
    if (pseudo_response.empty())
        return std::string(rewrite);
    std::string out;
    out.reserve(rewrite.size() + 1 + pseudo_response.size());
    out.append(rewrite);
    out.push_back(' ');
    out.append(pseudo_response);
    return out;
}

std::string truncate_query(std::string_view text, int max_tokens) {
    if (max_tokens < 1)
        throw std::invalid_argument("truncate_query: max_tokens must be >= 1, got " +
                                    std::to_string(max_tokens));
    std::vector<std::string> tokens = whitespace_tokens(text);
    if (tokens.size() <= static_cast<size_t>(max_tokens))
        return std::string(text);
    std::string out;
    for (int i = 0; i < max_tokens; ++i) {
        if (i > 0) out.push_back(' ');
        out.append(tokens[static_cast<size_t>(i)]);
    }
    return out;
}

ReformulationCandidate make_candidate(std::string rewrite, std::string pseudo_response,
                                      int candidate_index, long long generation_seed,
                                      int max_tokens) {
    ReformulationCandidate cand;
    cand.standalone_query = truncate_query(concat_standalone(rewrite, pseudo_response), max_tokens);
    cand.rewrite = std::move(rewrite);
    cand.pseudo_response = std::move(pseudo_response);
    cand.candidate_index = candidate_index;
    cand.generation_seed = generation_seed;
    return cand;
}

} // namespace bon
