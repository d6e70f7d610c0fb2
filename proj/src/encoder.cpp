#include "bon/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bon/errors.hpp"
#include "bon/text.hpp"

namespace bon {

namespace {

// Underscores never survive analyze(), so this cannot collide with a token.
const std::string kTurnSeparator = "_sep_";

void hash_ngrams(const std::vector<std::string>& tokens, const EncoderConfig& config,
                 const char* field_salt, std::vector<double>& out, size_t offset) {
    for (int order = config.min_ngram; order <= config.max_ngram; ++order) {
        if (static_cast<size_t>(order) > tokens.size()) break;
        for (size_t i = 0; i + static_cast<size_t>(order) <= tokens.size(); ++i) {
            std::string gram(field_salt);
            for (int k = 0; k < order; ++k) {
                gram.push_back('\x1f');
                gram.append(tokens[i + static_cast<size_t>(k)]);
            }
            size_t bin = static_cast<size_t>(fnv1a64(gram) %
                                             static_cast<std::uint64_t>(config.hash_dim));
            out[offset + bin] += 1.0;
        }
    }
}

void l2_normalize(std::vector<double>& v, size_t offset, size_t len, double weight) {
    double norm_sq = 0.0;
    for (size_t i = offset; i < offset + len; ++i) norm_sq += v[i] * v[i];
    if (norm_sq <= 0.0) return;
    double scale = weight / std::sqrt(norm_sq);
    for (size_t i = offset; i < offset + len; ++i) v[i] *= scale;
}

} // namespace

void EncoderConfig::validate() const {
    if (hash_dim < 1)
        throw ConfigError("encoder: hash_dim must be >= 1, got " + std::to_string(hash_dim));
    if (min_ngram < 1 || max_ngram < min_ngram)
        throw ConfigError("encoder: need 1 <= min_ngram <= max_ngram, got " +
                          std::to_string(min_ngram) + ".." + std::to_string(max_ngram));
    if (max_history_turns < 0)
        throw ConfigError("encoder: max_history_turns must be >= 0");
}

nlohmann::json EncoderConfig::to_json() const {
    return {{"hash_dim", hash_dim},
            {"min_ngram", min_ngram},
            {"max_ngram", max_ngram},
            {"include_history", include_history},
            {"max_history_turns", max_history_turns},
            {"candidate_weight", candidate_weight},
            {"session_weight", session_weight},
            {"interaction_weight", interaction_weight}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
    EncoderConfig config;
    config.hash_dim = j.value("hash_dim", config.hash_dim);
    config.min_ngram = j.value("min_ngram", config.min_ngram);
    config.max_ngram = j.value("max_ngram", config.max_ngram);
    config.include_history = j.value("include_history", config.include_history);
    config.max_history_turns = j.value("max_history_turns", config.max_history_turns);
    config.candidate_weight = j.value("candidate_weight", config.candidate_weight);
    config.session_weight = j.value("session_weight", config.session_weight);
    config.interaction_weight = j.value("interaction_weight", config.interaction_weight);
    config.validate();
    return config;
}

std::vector<std::string> session_tokens(const ConversationSession& session,
                                        const EncoderConfig& config) {
    std::vector<std::string> tokens;
    if (config.include_history) {
        size_t first = 0;
        if (session.history.size() > static_cast<size_t>(config.max_history_turns))
            first = session.history.size() - static_cast<size_t>(config.max_history_turns);
        for (size_t i = first; i < session.history.size(); ++i) {
            for (std::string& t : analyze(session.history[i].query))
                tokens.push_back(std::move(t));
            tokens.push_back(kTurnSeparator);
            for (std::string& t : analyze(session.history[i].response))
                tokens.push_back(std::move(t));
            tokens.push_back(kTurnSeparator);
        }
    }
    for (std::string& t : analyze(session.current_query)) tokens.push_back(std::move(t));
    return tokens;
}

EncodedPair encode(const ReformulationCandidate& candidate, const ConversationSession& session,
                   const EncoderConfig& config) {
    config.validate();
    const size_t dim = static_cast<size_t>(config.hash_dim);
    EncodedPair pair;
    pair.features.assign(static_cast<size_t>(config.feature_dim()), 0.0);

    std::vector<std::string> cand_tokens = analyze(candidate.standalone_query);
    std::vector<std::string> sess_tokens = session_tokens(session, config);

    hash_ngrams(cand_tokens, config, "cand", pair.features, 0);
    hash_ngrams(sess_tokens, config, "sess", pair.features, dim);
    l2_normalize(pair.features, 0, dim, config.candidate_weight);
    l2_normalize(pair.features, dim, dim, config.session_weight);

    // Interaction features stay raw so Jaccard keeps its [0,1] meaning.
    std::set<std::string> cand_set(cand_tokens.begin(), cand_tokens.end());
    std::set<std::string> sess_set;
    for (const std::string& t : sess_tokens) {
        if (t != kTurnSeparator) sess_set.insert(t);
    }
    std::vector<std::string> shared;
    std::set_intersection(cand_set.begin(), cand_set.end(), sess_set.begin(), sess_set.end(),
                          std::back_inserter(shared));
    size_t union_size = cand_set.size() + sess_set.size() - shared.size();
    double sess_len = 0.0;
    for (const std::string& t : sess_tokens) {
        if (t != kTurnSeparator) sess_len += 1.0;
    }

    double w = config.interaction_weight;
    pair.features[2 * dim + 0] = w * static_cast<double>(shared.size());
    pair.features[2 * dim + 1] =
        w * (union_size == 0 ? 0.0
                             : static_cast<double>(shared.size()) / static_cast<double>(union_size));
    pair.features[2 * dim + 2] =
        w * static_cast<double>(cand_tokens.size()) / std::max(1.0, sess_len);
    return pair;
}

} // namespace bon
