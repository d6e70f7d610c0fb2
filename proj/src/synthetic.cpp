#include "bon/synthetic.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "bon/errors.hpp"
#include "bon/jsonl.hpp"
#include "bon/sparse.hpp"
#include "bon/text.hpp"

namespace bon {

namespace {

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

double draw_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

std::string topic_token(int topic, int which) {
    return "t" + std::to_string(topic) + static_cast<char>('a' + which);
}

std::string filler(std::uint64_t i) { return "f" + std::to_string(i); }

const char* kCurrentQueries[] = {
    "what else should i know about it",
    "does it have any other details",
    "tell me more about it",
    "how does it compare overall",
};

} // namespace

void SynthConfig::validate() const {
    if (passage_count < 2) throw ConfigError("synth: passage_count must be >= 2");
    if (topic_tokens < 2 || topic_tokens > 26)
        throw ConfigError("synth: topic_tokens must be in [2,26]");
    if (train_sessions < 1 || eval_sessions < 1)
        throw ConfigError("synth: need at least one session per split");
    if (pool_size < 1) throw ConfigError("synth: pool_size must be >= 1");
    if (!(p_top >= 0.0 && p_mid >= 0.0 && p_top + p_mid <= 1.0))
        throw ConfigError("synth: tier probabilities must be non-negative and sum to <= 1");
    if (min_history_turns < 1 || max_history_turns < min_history_turns)
        throw ConfigError("synth: bad history turn range");
}

TopicEmbedder::TopicEmbedder(int dimension) : dimension_(dimension) {
    if (dimension < 1) throw ConfigError("topic embedder dimension must be >= 1");
}

std::vector<float> TopicEmbedder::embed(std::string_view text) const {
    std::vector<float> v(static_cast<std::size_t>(dimension_), 0.0f);
    for (const std::string& token : analyze(text)) {
        if (token.size() < 2 || token[0] != 't') continue;
        std::size_t pos = 1;
        while (pos < token.size() && std::isdigit(static_cast<unsigned char>(token[pos]))) ++pos;
        if (pos == 1) continue; // "t" not followed by digits
        int topic = 0;
        try {
            topic = std::stoi(token.substr(1, pos - 1));
        } catch (const std::exception&) {
            continue;
        }
        if (topic >= 0 && topic < dimension_) v[static_cast<std::size_t>(topic)] += 1.0f;
    }
    double norm_sq = 0.0;
    for (float x : v) norm_sq += static_cast<double>(x) * static_cast<double>(x);
    if (norm_sq > 0.0) {
        float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
        for (float& x : v) x *= inv;
    }
    return v;
}

namespace {

ConversationSession make_session(std::mt19937_64& rng, const SynthConfig& config,
                                 const std::string& session_id, int gold_topic) {
    ConversationSession session;
    session.session_id = session_id;

    int turns = config.min_history_turns +
                static_cast<int>(draw(rng, static_cast<std::uint64_t>(config.max_history_turns -
                                                                      config.min_history_turns + 1)));
    for (int t = 0; t < turns; ++t) {
        Turn turn;
        int a = t % config.topic_tokens;
        int b = (t + 1) % config.topic_tokens;
        int c = (t + 2) % config.topic_tokens;
        if (t == 0) {
            turn.query = "tell me about " + topic_token(gold_topic, a) + " and " +
                         topic_token(gold_topic, b);
            turn.response = "they relate to " + topic_token(gold_topic, c) + " and " +
                            topic_token(gold_topic, (t + 3) % config.topic_tokens) + " " +
                            filler(draw(rng, static_cast<std::uint64_t>(config.filler_vocab)));
        } else {
            turn.query = "what is special about " + topic_token(gold_topic, a);
            turn.response = "it connects with " + topic_token(gold_topic, b) + " " +
                            filler(draw(rng, static_cast<std::uint64_t>(config.filler_vocab)));
        }
        session.history.push_back(std::move(turn));
    }
    session.turn_index = turns + 1;
    session.current_query =
        kCurrentQueries[draw(rng, sizeof(kCurrentQueries) / sizeof(kCurrentQueries[0]))];
    return session;
}

// Every tier shares one token template, so tier quality is observable only
// through overlap with the session context: full match carries all gold
// topic tokens, partial carries one, wrong-topic carries none.
std::string tier_output(std::mt19937_64& rng, const SynthConfig& config, int gold_topic,
                        int tier) {
    // Wrong topic, distinct from the gold one.
    int other = static_cast<int>(draw(rng, static_cast<std::uint64_t>(config.passage_count - 1)));
    if (other >= gold_topic) ++other;

    auto tok = [&](int topic, int which) { return topic_token(topic, which % config.topic_tokens); };
    std::string rewrite = "tell me about";
    std::string response = "it concerns ";
    if (tier == 0) {
        rewrite += " " + tok(gold_topic, 0) + " " + tok(gold_topic, 1) + " " + tok(gold_topic, 2);
        response += tok(gold_topic, 3);
    } else if (tier == 1) {
        rewrite += " " + tok(gold_topic, 0) + " " + tok(other, 1) + " " + tok(other, 2);
        response += tok(other, 3);
    } else {
        rewrite += " " + tok(other, 0) + " " + tok(other, 1) + " " + tok(other, 2);
        response += tok(other, 3);
    }
    std::string reason = "the context points to the discussed subject";
    return format_output(reason, rewrite, response);
}

void add_split(std::mt19937_64& rng, const SynthConfig& config, const std::string& prefix,
               int count, std::vector<ConversationSession>& sessions, FixtureClient& fixture,
               Qrels& qrels) {
    for (int i = 0; i < count; ++i) {
        int gold_topic = static_cast<int>(draw(rng, static_cast<std::uint64_t>(config.passage_count)));
        ConversationSession session =
            make_session(rng, config, prefix + std::to_string(i), gold_topic);
        qrels.grades[session.ref().key()]["p" + std::to_string(gold_topic)] = 1;
        for (int r = 0; r < config.pool_size; ++r) {
            double u = draw_unit(rng);
            int tier = u < config.p_top ? 0 : (u < config.p_top + config.p_mid ? 1 : 2);
            fixture.add(session.ref(), r, tier_output(rng, config, gold_topic, tier));
        }
        sessions.push_back(std::move(session));
    }
}

} // namespace

SynthDataset make_synth_dataset(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    SynthDataset dataset;

    dataset.passages.reserve(static_cast<std::size_t>(config.passage_count));
    for (int k = 0; k < config.passage_count; ++k) {
        std::string text;
        for (int t = 0; t < config.topic_tokens; ++t) {
            if (t > 0) text += " ";
            text += topic_token(k, t);
        }
        int fillers = config.min_fillers +
                      static_cast<int>(draw(rng, static_cast<std::uint64_t>(config.max_fillers -
                                                                            config.min_fillers + 1)));
        for (int f = 0; f < fillers; ++f)
            text += " " + filler(draw(rng, static_cast<std::uint64_t>(config.filler_vocab)));
        dataset.passages.push_back(Passage{"p" + std::to_string(k), std::move(text)});
    }

    add_split(rng, config, "tr", config.train_sessions, dataset.train_sessions, dataset.fixture,
              dataset.qrels);
    add_split(rng, config, "ev", config.eval_sessions, dataset.eval_sessions, dataset.fixture,
              dataset.qrels);
    return dataset;
}

void write_synth_dataset(const SynthDataset& dataset, const SynthConfig& config,
                         const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_passages_jsonl(dir / "passages.jsonl", dataset.passages);
    write_sessions_jsonl(dir / "sessions_train.jsonl", dataset.train_sessions);
    write_sessions_jsonl(dir / "sessions_eval.jsonl", dataset.eval_sessions);
    dataset.fixture.save(dir / "fixture.jsonl");
    write_qrels(dir / "qrels.txt", dataset.qrels);

    TopicEmbedder embedder(config.passage_count);
    embed_passages(dataset.passages, embedder).save(dir / "vectors.bin");

    json pipeline = {
        {"seed", config.seed},
        {"paths",
         {{"passages", (dir / "passages.jsonl").string()},
          {"vectors", (dir / "vectors.bin").string()},
          {"sessions_train", (dir / "sessions_train.jsonl").string()},
          {"sessions_eval", (dir / "sessions_eval.jsonl").string()},
          {"fixture", (dir / "fixture.jsonl").string()},
          {"qrels", (dir / "qrels.txt").string()},
          {"out_dir", (dir / "out").string()}}},
        {"retrieval",
         {{"k1", 0.9}, {"b", 0.4}, {"depth", 100}, {"embedder", "topic"},
          {"embedder_dim", config.passage_count}}},
        {"generation", {{"n", config.pool_size}, {"temperature", 0.7}, {"request_seed_base", 0}}},
        {"reward",
         {{"encoder", {{"hash_dim", 1024}, {"include_history", true}}},
          {"training",
           {{"margin", 0.1}, {"learning_rate", 0.01}, {"epochs", 10}, {"warmup_fraction", 0.1},
            {"hidden_dim", 64}}}}},
        {"selection",
         {{"strategies", json::array({"first", "oracle", "reward"})},
          {"budgets", json::array({1, 2, 4, 8, 16})}, {"run_system", "sparse"}}},
        {"eval", {{"mrr_cutoff", 0}, {"rel_threshold", 1}}}};
    std::ofstream out(dir / "pipeline.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "pipeline.json").string());
    out << pipeline.dump(2) << '\n';
}

} // namespace bon
