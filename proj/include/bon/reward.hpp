#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bon/assessment.hpp"
#include "bon/encoder.hpp"
#include "bon/types.hpp"

namespace bon {

/**
 * One-hidden-layer scorer over encoded (candidate, session) pairs:
 *   r = w2 . tanh(W1 x + b1) + b2
 *
 * Parameters are stored flat in the order W1 (row-major, hidden x feature),
 * b1, w2, b2 and are kept exactly representable as 32-bit floats so the
 * checkpoint round-trip is lossless. Scoring is pure and safe to share
 * across threads.
 */
struct RewardModel {
    EncoderConfig encoder;
    int feature_dim = kInteractionFeatures; // matches encoder.feature_dim() for trained models
    int hidden_dim = 64;
    std::vector<double> params;

    // Training provenance.
    std::uint64_t seed = 0;
    double margin = 0.1;
    int epochs = 0;

    std::size_t param_count() const {
        std::size_t f = static_cast<std::size_t>(feature_dim);
        std::size_t h = static_cast<std::size_t>(hidden_dim);
        return f * h + h + h + 1;
    }
};

struct TrainingConfig {
    double margin = 0.1;        // rank-distance margin scale
    double learning_rate = 1e-2;
    int epochs = 10;
    double warmup_fraction = 0.1; // linear warmup, then cosine decay
    int hidden_dim = 64;
    std::uint64_t seed = 0;

    void validate() const;
};

// Scores one encoded pair; throws DimensionError on a feature-length mismatch.
double score(const RewardModel& model, const EncodedPair& pair);

// Listwise hinge loss over scores listed in assigned-rank order (index 0 =
// rank 1): sum over i<j of max(0, r_j - r_i + (j-i)*margin). Zero for a
// single-candidate pool. Throws ConfigError when margin <= 0.
double ranking_loss(std::span<const double> scores_by_rank, double margin);

// Feature vectors of one pool's candidates in assigned-rank order.
using RankedPool = std::vector<EncodedPair>;

// Exact subgradient of the summed ranking loss over the batch, composed with
// the scorer; hinge terms at exactly zero contribute nothing. Pools are
// accumulated in the order given.
std::vector<double> loss_gradient(const RewardModel& model, std::span<const RankedPool> batch,
                                  double margin);

// Total ranking loss of the batch under the model.
double batch_loss(const RewardModel& model, std::span<const RankedPool> batch, double margin);

// A candidate pool joined with its assessment records.
struct LabeledPool {
    CandidatePool pool;
    std::vector<AssessmentRecord> records;
};

struct TrainReport {
    // Total training-set loss evaluated at the end of each epoch.
    std::vector<double> epoch_loss;
};

// Trains a fresh model: W1 initialized uniform in +-1/sqrt(feature_dim) from
// the seed, biases and output weights zero; one gradient step per pool with
// linear warmup and cosine decay over all steps. Deterministic given the
// seed. Throws DataError on an empty training set or mismatched records.
RewardModel train(std::span<const LabeledPool> pools,
                  const std::vector<ConversationSession>& sessions,
                  const EncoderConfig& encoder_config, const TrainingConfig& config,
                  TrainReport* report = nullptr);

// Checkpoint: one JSON header line, then param_count little-endian 32-bit
// floats. Loading a truncated or corrupt file reports the byte offset.
void save_model(const RewardModel& model, const std::filesystem::path& path);
RewardModel load_model(const std::filesystem::path& path);

} // namespace bon
