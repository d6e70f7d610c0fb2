#include "bon/reward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "bon/errors.hpp"

namespace bon {

using json = nlohmann::json;

namespace {

// Parameter block offsets within the flat vector.
struct Layout {
    std::size_t w1 = 0;
    std::size_t b1, w2, b2, total;
    Layout(int feature_dim, int hidden_dim) {
        std::size_t f = static_cast<std::size_t>(feature_dim);
        std::size_t h = static_cast<std::size_t>(hidden_dim);
        b1 = f * h;
        w2 = b1 + h;
        b2 = w2 + h;
        total = b2 + 1;
    }
};

void forward(std::span<const double> params, const Layout& lay, int feature_dim, int hidden_dim,
             std::span<const double> x, std::vector<double>& hidden_out, double& score_out) {
    hidden_out.resize(static_cast<std::size_t>(hidden_dim));
    double r = params[lay.b2];
    for (int j = 0; j < hidden_dim; ++j) {
        const double* row = params.data() + lay.w1 + static_cast<std::size_t>(j) * feature_dim;
        double z = params[lay.b1 + static_cast<std::size_t>(j)];
        for (int f = 0; f < feature_dim; ++f) z += row[f] * x[static_cast<std::size_t>(f)];
        double h = std::tanh(z);
        hidden_out[static_cast<std::size_t>(j)] = h;
        r += params[lay.w2 + static_cast<std::size_t>(j)] * h;
    }
    score_out = r;
}

// Adds coeff * d(score)/d(params) for one example, reusing its hidden
// activations from the forward pass.
void accumulate_score_grad(std::span<const double> params, const Layout& lay, int feature_dim,
                           int hidden_dim, std::span<const double> x,
                           std::span<const double> hidden, double coeff,
                           std::vector<double>& grad) {
    grad[lay.b2] += coeff;
    for (int j = 0; j < hidden_dim; ++j) {
        double h = hidden[static_cast<std::size_t>(j)];
        grad[lay.w2 + static_cast<std::size_t>(j)] += coeff * h;
        double dz = coeff * params[lay.w2 + static_cast<std::size_t>(j)] * (1.0 - h * h);
        if (dz == 0.0) continue;
        grad[lay.b1 + static_cast<std::size_t>(j)] += dz;
        double* grow = grad.data() + lay.w1 + static_cast<std::size_t>(j) * feature_dim;
        for (int f = 0; f < feature_dim; ++f) grow[f] += dz * x[static_cast<std::size_t>(f)];
    }
}

void check_pair_dim(const RewardModel& model, const EncodedPair& pair) {
    if (static_cast<int>(pair.features.size()) != model.feature_dim)
        throw DimensionError("model input has " + std::to_string(pair.features.size()) +
                             " features, model expects " + std::to_string(model.feature_dim));
}

// Loss + per-candidate score coefficients for one pool under given scores.
double pair_coefficients(std::span<const double> scores, double margin,
                         std::vector<double>& coeff) {
    coeff.assign(scores.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        for (std::size_t j = i + 1; j < scores.size(); ++j) {
            double term = scores[j] - scores[i] + static_cast<double>(j - i) * margin;
            if (term > 0.0) {
                loss += term;
                coeff[j] += 1.0;
                coeff[i] -= 1.0;
            }
        }
    }
    return loss;
}

// 53-bit uniform in [0,1) from two engine draws; avoids the
// implementation-defined std::uniform_real_distribution.
double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

double f32_round(double v) { return static_cast<double>(static_cast<float>(v)); }

} // namespace

void TrainingConfig::validate() const {
    if (!(margin > 0.0))
        throw ConfigError("training: margin must be > 0, got " + std::to_string(margin));
    if (!(learning_rate > 0.0))
        throw ConfigError("training: learning_rate must be > 0, got " +
                          std::to_string(learning_rate));
    if (epochs < 0) throw ConfigError("training: epochs must be >= 0");
    if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0))
        throw ConfigError("training: warmup_fraction must be in [0,1], got " +
                          std::to_string(warmup_fraction));
    if (hidden_dim < 1) throw ConfigError("training: hidden_dim must be >= 1");
}

double score(const RewardModel& model, const EncodedPair& pair) {
    check_pair_dim(model, pair);
    Layout lay(model.feature_dim, model.hidden_dim);
    std::vector<double> hidden;
    double r = 0.0;
    forward(model.params, lay, model.feature_dim, model.hidden_dim, pair.features, hidden, r);
    return r;
}

double ranking_loss(std::span<const double> scores_by_rank, double margin) {
    if (!(margin > 0.0))
        throw ConfigError("ranking_loss: margin must be > 0, got " + std::to_string(margin));
    double loss = 0.0;
    for (std::size_t i = 0; i < scores_by_rank.size(); ++i) {
        for (std::size_t j = i + 1; j < scores_by_rank.size(); ++j) {
            double term =
                scores_by_rank[j] - scores_by_rank[i] + static_cast<double>(j - i) * margin;
            if (term > 0.0) loss += term;
        }
    }
    return loss;
}

std::vector<double> loss_gradient(const RewardModel& model, std::span<const RankedPool> batch,
                                  double margin) {
    if (!(margin > 0.0))
        throw ConfigError("loss_gradient: margin must be > 0, got " + std::to_string(margin));
    Layout lay(model.feature_dim, model.hidden_dim);
    std::vector<double> grad(lay.total, 0.0);
    std::vector<double> scores;
    std::vector<std::vector<double>> hiddens;
    std::vector<double> coeff;
    for (const RankedPool& pool : batch) {
        scores.resize(pool.size());
        hiddens.resize(pool.size());
        for (std::size_t c = 0; c < pool.size(); ++c) {
            check_pair_dim(model, pool[c]);
            forward(model.params, lay, model.feature_dim, model.hidden_dim, pool[c].features,
                    hiddens[c], scores[c]);
        }
        pair_coefficients(scores, margin, coeff);
        for (std::size_t c = 0; c < pool.size(); ++c) {
            if (coeff[c] == 0.0) continue;
            accumulate_score_grad(model.params, lay, model.feature_dim, model.hidden_dim,
                                  pool[c].features, hiddens[c], coeff[c], grad);
        }
    }
    return grad;
}

double batch_loss(const RewardModel& model, std::span<const RankedPool> batch, double margin) {
    double total = 0.0;
    std::vector<double> scores;
    for (const RankedPool& pool : batch) {
        scores.clear();
        for (const EncodedPair& pair : pool) scores.push_back(score(model, pair));
        total += ranking_loss(scores, margin);
    }
    return total;
}

namespace {

double schedule_lr(const TrainingConfig& config, long long step, long long total_steps) {
    long long warmup_steps = std::llround(config.warmup_fraction * static_cast<double>(total_steps));
    if (warmup_steps > 0 && step < warmup_steps) {
        return config.learning_rate * static_cast<double>(step + 1) /
               static_cast<double>(warmup_steps);
    }
    if (total_steps <= warmup_steps) return config.learning_rate;
    double progress = static_cast<double>(step - warmup_steps) /
                      static_cast<double>(total_steps - warmup_steps);
    return config.learning_rate * 0.5 * (1.0 + std::cos(M_PI * progress));
}

std::vector<RankedPool> encode_training_pools(std::span<const LabeledPool> pools,
                                              const std::vector<ConversationSession>& sessions,
                                              const EncoderConfig& encoder_config) {
    std::map<SessionRef, const ConversationSession*> by_ref;
    for (const ConversationSession& s : sessions) by_ref[s.ref()] = &s;

    std::vector<RankedPool> encoded;
    encoded.reserve(pools.size());
    for (const LabeledPool& lp : pools) {
        validate_pool(lp.pool);
        if (lp.records.size() != lp.pool.candidates.size())
            throw DataError("pool " + lp.pool.session.key() + ": " +
                            std::to_string(lp.records.size()) + " assessment records for " +
                            std::to_string(lp.pool.candidates.size()) + " candidates");
        auto it = by_ref.find(lp.pool.session);
        if (it == by_ref.end())
            throw DataError("pool " + lp.pool.session.key() + ": session not found");

        // Candidates in assigned-rank order (rank 1 first).
        std::vector<const AssessmentRecord*> by_rank(lp.records.size(), nullptr);
        for (const AssessmentRecord& rec : lp.records) {
            if (rec.assigned_rank < 1 ||
                rec.assigned_rank > static_cast<int>(lp.records.size()) ||
                by_rank[static_cast<std::size_t>(rec.assigned_rank - 1)] != nullptr)
                throw DataError("pool " + lp.pool.session.key() +
                                ": assigned ranks are not a permutation of 1..n");
            by_rank[static_cast<std::size_t>(rec.assigned_rank - 1)] = &rec;
        }
        RankedPool ranked;
        ranked.reserve(by_rank.size());
        for (const AssessmentRecord* rec : by_rank) {
            int idx = rec->candidate_index;
            if (idx < 0 || idx >= static_cast<int>(lp.pool.candidates.size()))
                throw DataError("pool " + lp.pool.session.key() +
                                ": assessment references unknown candidate " +
                                std::to_string(idx));
            ranked.push_back(
                encode(lp.pool.candidates[static_cast<std::size_t>(idx)], *it->second,
                       encoder_config));
        }
        encoded.push_back(std::move(ranked));
    }
    return encoded;
}

} // namespace

RewardModel train(std::span<const LabeledPool> pools,
                  const std::vector<ConversationSession>& sessions,
                  const EncoderConfig& encoder_config, const TrainingConfig& config,
                  TrainReport* report) {
    config.validate();
    encoder_config.validate();
    if (pools.empty()) throw DataError("training set is empty");

    std::vector<RankedPool> encoded = encode_training_pools(pools, sessions, encoder_config);

    RewardModel model;
    model.encoder = encoder_config;
    model.feature_dim = encoder_config.feature_dim();
    model.hidden_dim = config.hidden_dim;
    model.seed = config.seed;
    model.margin = config.margin;
    model.epochs = config.epochs;

    Layout lay(model.feature_dim, model.hidden_dim);
    model.params.assign(lay.total, 0.0);
    std::mt19937_64 rng(config.seed);
    double bound = 1.0 / std::sqrt(static_cast<double>(model.feature_dim));
    for (std::size_t i = 0; i < lay.b1; ++i)
        model.params[i] = f32_round((2.0 * next_uniform(rng) - 1.0) * bound);

    long long total_steps = static_cast<long long>(config.epochs) *
                            static_cast<long long>(encoded.size());
    long long step = 0;
    std::vector<double> grad;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (const RankedPool& pool : encoded) {
            double lr = schedule_lr(config, step, total_steps);
            grad = loss_gradient(model, std::span<const RankedPool>(&pool, 1), config.margin);
            for (std::size_t i = 0; i < model.params.size(); ++i)
                model.params[i] -= lr * grad[i];
            ++step;
        }
        if (report) report->epoch_loss.push_back(batch_loss(model, encoded, config.margin));
    }

    for (double& p : model.params) p = f32_round(p);
    return model;
}

void save_model(const RewardModel& model, const std::filesystem::path& path) {
    json header;
    header["format"] = "reward-model";
    header["version"] = 1;
    header["feature_dim"] = model.feature_dim;
    header["hidden_dim"] = model.hidden_dim;
    header["encoder"] = model.encoder.to_json();
    header["margin"] = model.margin;
    header["seed"] = model.seed;
    header["epochs"] = model.epochs;
    header["param_count"] = model.param_count();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << header.dump() << '\n';
    for (double p : model.params) {
        float f = static_cast<float>(p);
        out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
    if (!out) throw IoError("write failed for " + path.string());
}

RewardModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string header_line;
    if (!std::getline(in, header_line))
        throw CheckpointError(path.string() + ": missing checkpoint header (byte offset 0)");
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded())
        throw CheckpointError(path.string() + ": checkpoint header is not valid JSON (byte offset 0)");
    if (header.value("format", "") != "reward-model")
        throw CheckpointError(path.string() + ": not a reward-model checkpoint");
    int version = header.value("version", 0);
    if (version != 1)
        throw CheckpointError(path.string() + ": incompatible checkpoint version " +
                              std::to_string(version) + " (this build reads version 1)");

    RewardModel model;
    try {
        model.encoder = EncoderConfig::from_json(header.at("encoder"));
        model.feature_dim = header.at("feature_dim").get<int>();
        model.hidden_dim = header.at("hidden_dim").get<int>();
        model.margin = header.at("margin").get<double>();
        model.seed = header.at("seed").get<std::uint64_t>();
        model.epochs = header.at("epochs").get<int>();
    } catch (const json::exception& e) {
        throw CheckpointError(path.string() + ": bad checkpoint header: " + e.what());
    }
    if (model.feature_dim != model.encoder.feature_dim())
        throw CheckpointError(path.string() + ": header feature_dim " +
                              std::to_string(model.feature_dim) +
                              " does not match the encoder config (" +
                              std::to_string(model.encoder.feature_dim()) + ")");
    std::size_t expected = model.param_count();
    if (header.at("param_count").get<std::size_t>() != expected)
        throw CheckpointError(path.string() + ": header param_count " +
                              std::to_string(header.at("param_count").get<std::size_t>()) +
                              " does not match dimensions (expected " + std::to_string(expected) +
                              ")");

    std::size_t header_bytes = header_line.size() + 1;
    model.params.resize(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        float f = 0.0f;
        in.read(reinterpret_cast<char*>(&f), sizeof(float));
        if (static_cast<std::size_t>(in.gcount()) != sizeof(float))
            throw CheckpointError(path.string() + ": truncated parameter block at byte offset " +
                                  std::to_string(header_bytes + i * sizeof(float)));
        if (!std::isfinite(f))
            throw CheckpointError(path.string() + ": non-finite parameter at byte offset " +
                                  std::to_string(header_bytes + i * sizeof(float)));
        model.params[i] = static_cast<double>(f);
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw CheckpointError(path.string() + ": trailing bytes after parameter block at offset " +
                              std::to_string(header_bytes + expected * sizeof(float)));
    return model;
}

} // namespace bon
