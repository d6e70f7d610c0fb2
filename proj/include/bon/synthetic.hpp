#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bon/dense.hpp"
#include "bon/eval.hpp"
#include "bon/generation.hpp"
#include "bon/types.hpp"

namespace bon {

/**
 * Deterministic synthetic conversational-search benchmark.
 *
 * Each passage owns a small set of unique topic tokens; each session's
 * history discusses one passage's topic while the current query stays
 * anaphoric. Fixture candidates come in three quality tiers: full topic
 * match, partial match (gold lands at rank 2 in both systems), and
 * wrong-topic (gold unretrieved by the sparse system). Candidate quality is
 * therefore observable from candidate/session token overlap, which is what
 * makes the benchmark separable for a selection model.
 */
struct SynthConfig {
    std::uint64_t seed = 7;
    int passage_count = 1000;
    int topic_tokens = 4; // unique tokens per passage, <= 26
    int train_sessions = 300;
    int eval_sessions = 250;
    int pool_size = 16;
    double p_top = 0.35; // full topic match
    double p_mid = 0.30; // partial match; remainder is wrong-topic
    int min_history_turns = 2;
    int max_history_turns = 4;
    int filler_vocab = 50;
    int min_fillers = 8;
    int max_fillers = 16;

    void validate() const;
};

struct SynthDataset {
    std::vector<Passage> passages;
    std::vector<ConversationSession> train_sessions;
    std::vector<ConversationSession> eval_sessions;
    FixtureClient fixture; // outputs for both splits
    Qrels qrels;           // judgments for both splits
};

SynthDataset make_synth_dataset(const SynthConfig& config);

// Maps tokens of the form "t<k><letters>" onto dimension k, L2-normalized.
// Pairs with the synthetic corpus so dense retrieval ranks by exact topic
// overlap; dimension equals the passage count.
class TopicEmbedder final : public QueryEmbedder {
public:
    explicit TopicEmbedder(int dimension);
    std::vector<float> embed(std::string_view text) const override;
    int dimension() const override { return dimension_; }

private:
    int dimension_;
};

// Writes passages.jsonl, sessions_train.jsonl, sessions_eval.jsonl,
// fixture.jsonl, qrels.txt, vectors.bin, and a ready-to-run pipeline.json
// into the directory.
void write_synth_dataset(const SynthDataset& dataset, const SynthConfig& config,
                         const std::filesystem::path& dir);

} // namespace bon
