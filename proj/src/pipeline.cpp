#include "bon/pipeline.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "bon/assessment.hpp"
#include "bon/errors.hpp"
#include "bon/inference.hpp"
#include "bon/jsonl.hpp"
#include "bon/synthetic.hpp"

namespace bon {

namespace {

std::filesystem::path path_or_empty(const json& j, const char* key) {
    if (!j.contains(key)) return {};
    return std::filesystem::path(j.at(key).get<std::string>());
}

} // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": invalid config JSON: " + e.what());
    }

    PipelineConfig config;
    config.seed = j.value("seed", config.seed);

    if (!j.contains("paths")) throw DataError(path.string() + ": missing 'paths' section");
    const json& paths = j.at("paths");
    config.passages = path_or_empty(paths, "passages");
    config.vectors = path_or_empty(paths, "vectors");
    config.sessions_train = path_or_empty(paths, "sessions_train");
    config.sessions_eval = path_or_empty(paths, "sessions_eval");
    config.fixture = path_or_empty(paths, "fixture");
    config.qrels = path_or_empty(paths, "qrels");
    config.out_dir = path_or_empty(paths, "out_dir");
    config.prompt_template = path_or_empty(paths, "prompt_template");

    if (j.contains("retrieval")) {
        const json& r = j.at("retrieval");
        config.bm25.k1 = r.value("k1", config.bm25.k1);
        config.bm25.b = r.value("b", config.bm25.b);
        config.depth = r.value("depth", config.depth);
        config.embedder_type = r.value("embedder", config.embedder_type);
        config.embedder_dim = r.value("embedder_dim", config.embedder_dim);
    }
    if (j.contains("generation")) {
        const json& g = j.at("generation");
        config.generation.n = g.value("n", config.generation.n);
        config.generation.temperature = g.value("temperature", config.generation.temperature);
        config.generation.max_output_tokens =
            g.value("max_output_tokens", config.generation.max_output_tokens);
        config.generation.request_seed_base =
            g.value("request_seed_base", config.generation.request_seed_base);
        config.generation.max_attempts = g.value("max_attempts", config.generation.max_attempts);
        config.generation.backoff_ms = g.value("backoff_ms", config.generation.backoff_ms);
        config.generation.max_in_flight =
            g.value("max_in_flight", config.generation.max_in_flight);
        config.generation.standalone_cap =
            g.value("standalone_cap", config.generation.standalone_cap);
    }
    if (j.contains("reward")) {
        const json& r = j.at("reward");
        if (r.contains("encoder")) config.encoder = EncoderConfig::from_json(r.at("encoder"));
        if (r.contains("training")) {
            const json& t = r.at("training");
            config.training.margin = t.value("margin", config.training.margin);
            config.training.learning_rate =
                t.value("learning_rate", config.training.learning_rate);
            config.training.epochs = t.value("epochs", config.training.epochs);
            config.training.warmup_fraction =
                t.value("warmup_fraction", config.training.warmup_fraction);
            config.training.hidden_dim = t.value("hidden_dim", config.training.hidden_dim);
        }
    }
    if (j.contains("selection")) {
        const json& s = j.at("selection");
        if (s.contains("strategies"))
            config.strategies = s.at("strategies").get<std::vector<std::string>>();
        if (s.contains("budgets")) config.budgets = s.at("budgets").get<std::vector<int>>();
        config.run_system = s.value("run_system", config.run_system);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        config.eval.mrr_cutoff = e.value("mrr_cutoff", config.eval.mrr_cutoff);
        config.eval.ndcg_k = e.value("ndcg_k", config.eval.ndcg_k);
        config.eval.recall_k = e.value("recall_k", config.eval.recall_k);
        config.eval.rel_threshold = e.value("rel_threshold", config.eval.rel_threshold);
    }

    config.training.seed = config.seed;
    config.validate();
    return config;
}

void PipelineConfig::validate() const {
    if (passages.empty()) throw ConfigError("pipeline: paths.passages is required");
    if (sessions_train.empty()) throw ConfigError("pipeline: paths.sessions_train is required");
    if (fixture.empty()) throw ConfigError("pipeline: paths.fixture is required");
    if (qrels.empty()) throw ConfigError("pipeline: paths.qrels is required");
    if (out_dir.empty()) throw ConfigError("pipeline: paths.out_dir is required");
    if (depth < 1) throw ConfigError("pipeline: retrieval.depth must be >= 1");
    if (run_system != "sparse" && run_system != "dense")
        throw ConfigError("pipeline: selection.run_system must be 'sparse' or 'dense', got '" +
                          run_system + "'");
    if (strategies.empty()) throw ConfigError("pipeline: selection.strategies is empty");
    if (budgets.empty()) throw ConfigError("pipeline: selection.budgets is empty");
    for (size_t i = 1; i < budgets.size(); ++i) {
        if (budgets[i] < budgets[i - 1])
            throw ConfigError("pipeline: selection.budgets must be sorted ascending");
    }
    bm25.validate();
    generation.validate();
    encoder.validate();
    training.validate();
}

std::unique_ptr<QueryEmbedder> make_embedder(const std::string& type, int dimension) {
    if (type == "hashing") return std::make_unique<HashingEmbedder>(dimension);
    if (type == "topic") return std::make_unique<TopicEmbedder>(dimension);
    throw ConfigError("unknown embedder type '" + type + "' (expected 'hashing' or 'topic')");
}

namespace {

struct SplitArtifacts {
    std::vector<ConversationSession> sessions;
    std::vector<CandidatePool> pools;
    std::vector<AssessedPool> assessed;
};

SplitArtifacts process_split(const std::vector<ConversationSession>& sessions,
                             FixtureClient& fixture, const PromptTemplate& tmpl,
                             const PipelineConfig& config, const SparseIndex& sparse,
                             const DenseIndex& dense, const QueryEmbedder& embedder,
                             const std::map<SessionRef, GoldLabel>& gold_by_ref) {
    SplitArtifacts split;
    split.sessions = sessions;
    for (const ConversationSession& session : split.sessions) {
        CandidatePool pool = generate_pool(fixture, tmpl, session, config.generation);
        auto gold = gold_by_ref.find(session.ref());
        if (gold == gold_by_ref.end())
            throw DataError("no gold label in qrels for session " + session.ref().key());
        AssessedPool assessed;
        assessed.session = pool.session;
        assessed.records =
            assess_pool(pool, sparse, dense, embedder, gold->second, config.depth);
        split.pools.push_back(std::move(pool));
        split.assessed.push_back(std::move(assessed));
    }
    return split;
}

TrecRun build_run(const SplitArtifacts& split, const std::vector<SelectionRow>& rows,
                  const PipelineConfig& config, const SparseIndex& sparse,
                  const DenseIndex& dense, const QueryEmbedder& embedder,
                  const std::string& tag) {
    std::map<SessionRef, const SelectionRow*> row_by_ref;
    for (const SelectionRow& row : rows) row_by_ref[row.session] = &row;

    TrecRun run;
    run.tag = tag;
    for (size_t i = 0; i < split.pools.size(); ++i) {
        const CandidatePool& pool = split.pools[i];
        const SelectionRow* row = row_by_ref.at(pool.session);
        RetrievalResult result;
        if (row->result.chosen_index == SelectionResult::kSyntheticQuery) {
            result = dense.search(row->result.synthetic_query, config.depth);
        } else {
            const ReformulationCandidate& chosen =
                pool.candidates[static_cast<size_t>(row->result.chosen_index)];
            if (config.run_system == "dense") {
                result = dense.search(embedder.embed(chosen.standalone_query), config.depth);
            } else {
                result = sparse.search(chosen.standalone_query, config.depth);
            }
        }
        add_query_result(run, pool.session.key(), result);
    }
    return run;
}

} // namespace

PipelineOutputs run_pipeline(const PipelineConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    std::filesystem::create_directories(config.out_dir / "runs");
    PipelineOutputs outputs;

    // Corpus and indexes.
    std::vector<Passage> passages = read_passages(config.passages);
    SparseIndex sparse = SparseIndex::build(passages, config.bm25);
    std::unique_ptr<QueryEmbedder> embedder =
        make_embedder(config.embedder_type, config.embedder_dim);
    DenseIndex dense = config.vectors.empty() ? embed_passages(passages, *embedder)
                                              : DenseIndex::load(config.vectors);
    if (dense.dimension() != embedder->dimension())
        throw ConfigError("pipeline: dense index dimension " + std::to_string(dense.dimension()) +
                          " != embedder dimension " + std::to_string(embedder->dimension()));

    // Gold labels.
    Qrels qrels = read_qrels(config.qrels);
    std::map<SessionRef, GoldLabel> gold_by_ref;
    for (GoldLabel& label : gold_labels_from_qrels(qrels, config.eval.rel_threshold))
        gold_by_ref[label.session] = std::move(label);

    // Generation inputs.
    PromptTemplate tmpl = config.prompt_template.empty()
                              ? PromptTemplate::builtin_default()
                              : PromptTemplate::load(config.prompt_template);
    FixtureClient fixture = FixtureClient::load(config.fixture);

    // Train split: generate, assess, train.
    std::vector<ConversationSession> train_sessions = read_sessions_jsonl(config.sessions_train);
    SplitArtifacts train_split = process_split(train_sessions, fixture, tmpl, config, sparse,
                                               dense, *embedder, gold_by_ref);
    outputs.candidates_train = config.out_dir / "candidates_train.jsonl";
    write_pools_jsonl(outputs.candidates_train, train_split.pools);
    outputs.assessments_train = config.out_dir / "assessments_train.jsonl";
    write_assessments_jsonl(outputs.assessments_train, train_split.assessed);

    std::vector<LabeledPool> labeled;
    labeled.reserve(train_split.pools.size());
    for (size_t i = 0; i < train_split.pools.size(); ++i)
        labeled.push_back(LabeledPool{train_split.pools[i], train_split.assessed[i].records});
    TrainReport train_report;
    RewardModel model = train(labeled, train_split.sessions, config.encoder, config.training,
                              &train_report);
    outputs.model_checkpoint = config.out_dir / "model.ckpt";
    save_model(model, outputs.model_checkpoint);
    {
        json log = {{"epoch_loss", train_report.epoch_loss}};
        std::ofstream out(config.out_dir / "training_log.json", std::ios::binary);
        out << log.dump(2) << '\n';
    }

    // Eval split (defaults to the train split).
    SplitArtifacts eval_split;
    if (config.sessions_eval.empty()) {
        eval_split = train_split;
    } else {
        std::vector<ConversationSession> eval_sessions =
            read_sessions_jsonl(config.sessions_eval);
        eval_split = process_split(eval_sessions, fixture, tmpl, config, sparse, dense, *embedder,
                                   gold_by_ref);
    }
    outputs.candidates_eval = config.out_dir / "candidates_eval.jsonl";
    write_pools_jsonl(outputs.candidates_eval, eval_split.pools);
    outputs.assessments_eval = config.out_dir / "assessments_eval.jsonl";
    write_assessments_jsonl(outputs.assessments_eval, eval_split.assessed);

    auto assessments_map =
        std::make_shared<std::map<SessionRef, std::vector<AssessmentRecord>>>();
    for (const AssessedPool& pool : eval_split.assessed)
        (*assessments_map)[pool.session] = pool.records;
    std::map<SessionRef, const ConversationSession*> session_by_ref;
    for (const ConversationSession& s : eval_split.sessions) session_by_ref[s.ref()] = &s;

    auto shared_model = std::make_shared<const RewardModel>(std::move(model));
    std::shared_ptr<const QueryEmbedder> shared_embedder(
        make_embedder(config.embedder_type, config.embedder_dim));

    // Selection and runs.
    std::vector<SelectionRow> all_rows;
    std::vector<MetricReport> reports;
    for (const std::string& name : config.strategies) {
        SelectionStrategy strategy = [&]() -> SelectionStrategy {
            if (name == "first") return SelectionStrategy::first();
            if (name == "random") return SelectionStrategy::random_choice(config.seed);
            if (name == "oracle") return SelectionStrategy::oracle(assessments_map);
            if (name == "reward") return SelectionStrategy::reward_argmax(shared_model);
            if (name == "mean") return SelectionStrategy::mean_aggregation(shared_embedder);
            throw ConfigError("pipeline: unknown strategy '" + name + "'");
        }();
        for (int budget : config.budgets) {
            std::vector<SelectionRow> rows;
            rows.reserve(eval_split.pools.size());
            for (const CandidatePool& pool : eval_split.pools) {
                const ConversationSession* session = session_by_ref.at(pool.session);
                SelectionRow row;
                row.session = pool.session;
                row.result = strategy.select(pool, *session, budget);
                rows.push_back(std::move(row));
            }
            std::string tag = name + "-n" + std::to_string(budget);
            TrecRun run =
                build_run(eval_split, rows, config, sparse, dense, *shared_embedder, tag);
            std::filesystem::path run_path =
                config.out_dir / "runs" / (name + "_n" + std::to_string(budget) + ".trec");
            write_trec_run(run_path, run);
            outputs.runs.push_back(run_path);

            MetricReport report = evaluate_run(run, qrels, config.eval);
            report.strategy = name;
            report.budget = budget;
            reports.push_back(std::move(report));
            all_rows.insert(all_rows.end(), rows.begin(), rows.end());
        }
    }

    outputs.selections = config.out_dir / "selections.jsonl";
    write_selections_jsonl(outputs.selections, all_rows);

    outputs.report_json = config.out_dir / "report.json";
    {
        json report_array = json::array();
        for (const MetricReport& report : reports) report_array.push_back(report_to_json(report));
        std::ofstream out(outputs.report_json, std::ios::binary);
        if (!out) throw IoError("cannot write " + outputs.report_json.string());
        out << report_array.dump(2) << '\n';
    }
    outputs.report_tsv = config.out_dir / "report.tsv";
    write_report_tsv(outputs.report_tsv, reports);
    outputs.reports = std::move(reports);
    return outputs;
}

} // namespace bon
