#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bon/types.hpp"

namespace bon {

// Number of token-overlap interaction features (shared count, Jaccard,
// candidate/session length ratio).
inline constexpr int kInteractionFeatures = 3;

// Hashed n-gram encoder settings. Two hashed sub-blocks (candidate text,
// session text) of hash_dim bins each, plus the interaction features.
struct EncoderConfig {
    int hash_dim = 4096;
    int min_ngram = 1;
    int max_ngram = 2;
    // When false the session block sees only the current query; this is the
    // context-ablation knob.
    bool include_history = true;
    int max_history_turns = 6;
    double candidate_weight = 1.0;
    double session_weight = 1.0;
    double interaction_weight = 1.0;

    int feature_dim() const { return 2 * hash_dim + kInteractionFeatures; }

    void validate() const;
    nlohmann::json to_json() const;
    static EncoderConfig from_json(const nlohmann::json& j);

    bool operator==(const EncoderConfig&) const = default;
};

// Joint feature vector for one (candidate, session) pair.
struct EncodedPair {
    std::vector<double> features;
};

// Session token stream: history turns (most recent max_history_turns),
// each query/response separated by a reserved token, then the current
// query. The separator cannot collide with analyzed text tokens.
std::vector<std::string> session_tokens(const ConversationSession& session,
                                        const EncoderConfig& config);

// Deterministic encoding: hashed n-gram counts of the candidate standalone
// query and of the session stream (each L2-normalized), then the raw
// interaction features. Field weights scale each sub-block.
EncodedPair encode(const ReformulationCandidate& candidate, const ConversationSession& session,
                   const EncoderConfig& config);

} // namespace bon
