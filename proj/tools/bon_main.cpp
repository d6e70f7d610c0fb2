// Command-line front end: index, embed-ingest, generate, assess, train,
// select, eval, and the end-to-end pipeline.

#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "bon/assessment.hpp"
#include "bon/dense.hpp"
#include "bon/errors.hpp"
#include "bon/eval.hpp"
#include "bon/generation.hpp"
#include "bon/inference.hpp"
#include "bon/jsonl.hpp"
#include "bon/pipeline.hpp"
#include "bon/reward.hpp"
#include "bon/sparse.hpp"

namespace {

using bon::json;

struct IndexArgs {
    std::string passages, out;
    double k1 = 0.9, b = 0.4;
};

struct EmbedArgs {
    std::string passages, vectors_in, out;
    std::string embedder = "hashing";
    int dim = 1024;
};

struct GenerateArgs {
    std::string sessions, fixture, out, template_path;
    bool use_http = false;
    int n = 16;
    double temperature = 0.7;
    long long seed_base = 0;
    int max_attempts = 3;
    int max_in_flight = 4;
};

struct AssessArgs {
    std::string pools, index, vectors, qrels, out;
    std::string embedder = "hashing";
    int dim = 1024;
    int depth = bon::kDefaultAssessmentDepth;
    int rel_threshold = 1;
};

struct TrainArgs {
    std::string assessments, candidates, sessions, out;
    std::uint64_t seed = 0;
    double margin = 0.1, lr = 1e-2, warmup = 0.1;
    int epochs = 10, hidden = 64, hash_dim = 4096;
    bool no_history = false;
};

struct SelectArgs {
    std::string pools, sessions, strategy, model, assessments, out;
    std::string run_out, index, vectors;
    std::string embedder = "hashing";
    int dim = 1024;
    std::vector<int> budgets{16};
    std::uint64_t seed = 0;
    int depth = bon::kDefaultAssessmentDepth;
};

struct EvalArgs {
    std::string run, qrels, tsv;
    int mrr_cutoff = 0;
    int rel_threshold = 1;
    bool per_query = false;
};

int cmd_index(const IndexArgs& args) {
    std::vector<bon::Passage> passages = bon::read_passages(args.passages);
    bon::SparseIndex index = bon::SparseIndex::build(passages, bon::Bm25Params{args.k1, args.b});
    index.save(args.out);
    std::cerr << "indexed " << index.doc_count() << " passages (avg length "
              << index.avg_doc_length() << ") -> " << args.out << "\n";
    return 0;
}

int cmd_embed(const EmbedArgs& args) {
    if (!args.vectors_in.empty()) {
        bon::DenseIndex index = bon::DenseIndex::load(args.vectors_in);
        if (!args.passages.empty()) {
            std::vector<bon::Passage> passages = bon::read_passages(args.passages);
            std::map<std::string, int> ids;
            for (const bon::Passage& p : passages) ids[p.passage_id] = 1;
            for (const std::string& id : index.passage_ids()) {
                if (!ids.count(id))
                    throw bon::DataError("vector file references passage '" + id +
                                         "' absent from the collection");
            }
        }
        index.save(args.out);
        std::cerr << "validated " << index.size() << " vectors (dimension " << index.dimension()
                  << ") -> " << args.out << "\n";
        return 0;
    }
    if (args.passages.empty())
        throw bon::ConfigError("embed-ingest needs --vectors or --passages");
    std::vector<bon::Passage> passages = bon::read_passages(args.passages);
    std::unique_ptr<bon::QueryEmbedder> embedder = bon::make_embedder(args.embedder, args.dim);
    bon::DenseIndex index = bon::embed_passages(passages, *embedder);
    index.save(args.out);
    std::cerr << "embedded " << index.size() << " passages (dimension " << index.dimension()
              << ") -> " << args.out << "\n";
    return 0;
}

int cmd_generate(const GenerateArgs& args) {
    std::vector<bon::ConversationSession> sessions = bon::read_sessions_jsonl(args.sessions);
    bon::PromptTemplate tmpl = args.template_path.empty()
                                   ? bon::PromptTemplate::builtin_default()
                                   : bon::PromptTemplate::load(args.template_path);
    bon::GenerationConfig config;
    config.n = args.n;
    config.temperature = args.temperature;
    config.request_seed_base = args.seed_base;
    config.max_attempts = args.max_attempts;
    config.max_in_flight = args.max_in_flight;

    std::unique_ptr<bon::GenerationClient> client;
    if (args.use_http) {
        client = std::make_unique<bon::HttpClient>(bon::HttpClient::from_env());
    } else {
        if (args.fixture.empty())
            throw bon::ConfigError("generate needs --fixture (or --http with env vars set)");
        client = std::make_unique<bon::FixtureClient>(bon::FixtureClient::load(args.fixture));
    }

    std::vector<bon::CandidatePool> pools;
    pools.reserve(sessions.size());
    for (const bon::ConversationSession& session : sessions)
        pools.push_back(bon::generate_pool(*client, tmpl, session, config));
    bon::write_pools_jsonl(args.out, pools);
    std::cerr << "generated " << pools.size() << " pools -> " << args.out << "\n";
    return 0;
}

int cmd_assess(const AssessArgs& args) {
    std::vector<bon::CandidatePool> pools = bon::read_pools_jsonl(args.pools);
    bon::SparseIndex sparse = bon::SparseIndex::load(args.index);
    bon::DenseIndex dense = bon::DenseIndex::load(args.vectors);
    std::unique_ptr<bon::QueryEmbedder> embedder = bon::make_embedder(args.embedder, args.dim);
    bon::Qrels qrels = bon::read_qrels(args.qrels);
    std::map<bon::SessionRef, bon::GoldLabel> gold;
    for (bon::GoldLabel& label : bon::gold_labels_from_qrels(qrels, args.rel_threshold))
        gold[label.session] = std::move(label);

    std::vector<bon::AssessedPool> assessed;
    assessed.reserve(pools.size());
    for (const bon::CandidatePool& pool : pools) {
        auto it = gold.find(pool.session);
        if (it == gold.end())
            throw bon::DataError("no gold label in qrels for session " + pool.session.key());
        bon::AssessedPool ap;
        ap.session = pool.session;
        ap.records = bon::assess_pool(pool, sparse, dense, *embedder, it->second, args.depth);
        assessed.push_back(std::move(ap));
    }
    bon::write_assessments_jsonl(args.out, assessed);
    std::cerr << "assessed " << assessed.size() << " pools -> " << args.out << "\n";
    return 0;
}

int cmd_train(const TrainArgs& args) {
    std::vector<bon::AssessedPool> assessed = bon::read_assessments_jsonl(args.assessments);
    std::vector<bon::CandidatePool> pools = bon::read_pools_jsonl(args.candidates);
    std::vector<bon::ConversationSession> sessions = bon::read_sessions_jsonl(args.sessions);

    std::map<bon::SessionRef, const bon::CandidatePool*> pool_by_ref;
    for (const bon::CandidatePool& pool : pools) pool_by_ref[pool.session] = &pool;
    std::vector<bon::LabeledPool> labeled;
    labeled.reserve(assessed.size());
    for (const bon::AssessedPool& ap : assessed) {
        auto it = pool_by_ref.find(ap.session);
        if (it == pool_by_ref.end())
            throw bon::DataError("assessments reference pool " + ap.session.key() +
                                 " absent from --candidates");
        labeled.push_back(bon::LabeledPool{*it->second, ap.records});
    }

    bon::EncoderConfig encoder;
    encoder.hash_dim = args.hash_dim;
    encoder.include_history = !args.no_history;
    bon::TrainingConfig config;
    config.margin = args.margin;
    config.learning_rate = args.lr;
    config.epochs = args.epochs;
    config.warmup_fraction = args.warmup;
    config.hidden_dim = args.hidden;
    config.seed = args.seed;

    bon::TrainReport report;
    bon::RewardModel model = bon::train(labeled, sessions, encoder, config, &report);
    bon::save_model(model, args.out);
    std::cerr << "trained on " << labeled.size() << " pools";
    if (!report.epoch_loss.empty()) std::cerr << ", final loss " << report.epoch_loss.back();
    std::cerr << " -> " << args.out << "\n";
    return 0;
}

int cmd_select(const SelectArgs& args) {
    std::vector<bon::CandidatePool> pools = bon::read_pools_jsonl(args.pools);
    std::vector<bon::ConversationSession> sessions = bon::read_sessions_jsonl(args.sessions);
    std::map<bon::SessionRef, const bon::ConversationSession*> session_by_ref;
    for (const bon::ConversationSession& s : sessions) session_by_ref[s.ref()] = &s;

    std::shared_ptr<const bon::QueryEmbedder> embedder;
    auto strategy = [&]() -> bon::SelectionStrategy {
        if (args.strategy == "first") return bon::SelectionStrategy::first();
        if (args.strategy == "random") return bon::SelectionStrategy::random_choice(args.seed);
        if (args.strategy == "oracle") {
            if (args.assessments.empty())
                throw bon::ConfigError("--strategy oracle requires --assessments");
            auto map = std::make_shared<std::map<bon::SessionRef,
                                                 std::vector<bon::AssessmentRecord>>>();
            for (bon::AssessedPool& ap : bon::read_assessments_jsonl(args.assessments))
                (*map)[ap.session] = std::move(ap.records);
            return bon::SelectionStrategy::oracle(map);
        }
        if (args.strategy == "reward") {
            if (args.model.empty()) throw bon::ConfigError("--strategy reward requires --model");
            auto model = std::make_shared<const bon::RewardModel>(bon::load_model(args.model));
            return bon::SelectionStrategy::reward_argmax(model);
        }
        if (args.strategy == "mean") {
            embedder = bon::make_embedder(args.embedder, args.dim);
            return bon::SelectionStrategy::mean_aggregation(embedder);
        }
        throw bon::ConfigError("unknown strategy '" + args.strategy +
                               "' (first|random|oracle|reward|mean)");
    }();

    std::vector<bon::SelectionRow> rows;
    for (const bon::CandidatePool& pool : pools) {
        auto it = session_by_ref.find(pool.session);
        if (it == session_by_ref.end())
            throw bon::DataError("pool " + pool.session.key() + " has no session row");
        for (bon::SelectionResult& result : strategy.sweep(pool, *it->second, args.budgets))
            rows.push_back(bon::SelectionRow{pool.session, std::move(result)});
    }
    bon::write_selections_jsonl(args.out, rows);
    std::cerr << "selected for " << pools.size() << " pools -> " << args.out << "\n";

    if (!args.run_out.empty()) {
        if (args.budgets.size() != 1)
            throw bon::ConfigError("--run-out needs exactly one --budget");
        std::map<bon::SessionRef, const bon::SelectionRow*> row_by_ref;
        for (const bon::SelectionRow& row : rows) row_by_ref[row.session] = &row;
        bon::TrecRun run;
        run.tag = args.strategy + "-n" + std::to_string(args.budgets[0]);
        const bool dense_run = !args.vectors.empty();
        bon::SparseIndex sparse;
        bon::DenseIndex dense;
        if (dense_run) {
            dense = bon::DenseIndex::load(args.vectors);
            if (!embedder) embedder = bon::make_embedder(args.embedder, args.dim);
        } else {
            if (args.index.empty())
                throw bon::ConfigError("--run-out requires --index (sparse) or --vectors (dense)");
            sparse = bon::SparseIndex::load(args.index);
        }
        for (const bon::CandidatePool& pool : pools) {
            const bon::SelectionRow* row = row_by_ref.at(pool.session);
            bon::RetrievalResult result;
            if (row->result.chosen_index == bon::SelectionResult::kSyntheticQuery) {
                result = dense.search(row->result.synthetic_query, args.depth);
            } else {
                const std::string& query =
                    pool.candidates[static_cast<size_t>(row->result.chosen_index)]
                        .standalone_query;
                result = dense_run ? dense.search(embedder->embed(query), args.depth)
                                   : sparse.search(query, args.depth);
            }
            bon::add_query_result(run, pool.session.key(), result);
        }
        bon::write_trec_run(args.run_out, run);
        std::cerr << "run -> " << args.run_out << "\n";
    }
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    bon::TrecRun run = bon::read_trec_run(args.run);
    bon::Qrels qrels = bon::read_qrels(args.qrels);
    bon::EvalOptions options;
    options.mrr_cutoff = args.mrr_cutoff;
    options.rel_threshold = args.rel_threshold;
    bon::MetricReport report = bon::evaluate_run(run, qrels, options);
    report.strategy = run.tag;
    std::cout << bon::report_to_json(report, args.per_query).dump(2) << "\n";
    if (!args.tsv.empty()) {
        bon::write_report_tsv(args.tsv, {&report, 1});
    }
    return 0;
}

int cmd_pipeline(const std::string& config_path, const std::string& out_dir_override) {
    bon::PipelineConfig config = bon::PipelineConfig::load(config_path);
    if (!out_dir_override.empty()) config.out_dir = out_dir_override;
    bon::PipelineOutputs outputs = bon::run_pipeline(config);
    json summary = json::array();
    for (const bon::MetricReport& report : outputs.reports)
        summary.push_back(bon::report_to_json(report));
    std::cout << summary.dump(2) << "\n";
    std::cerr << "pipeline outputs in " << config.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Best-of-N conversational query reformulation pipeline"};
    app.require_subcommand(1);

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "Build a BM25 index from a passage collection");
    index_cmd->add_option("--passages", index_args.passages, "Passage TSV or JSONL")->required();
    index_cmd->add_option("--out", index_args.out, "Index output path")->required();
    index_cmd->add_option("--k1", index_args.k1, "BM25 k1");
    index_cmd->add_option("--b", index_args.b, "BM25 b");

    EmbedArgs embed_args;
    auto* embed_cmd =
        app.add_subcommand("embed-ingest", "Ingest or generate dense passage vectors");
    embed_cmd->add_option("--vectors", embed_args.vectors_in, "Existing vector file to validate");
    embed_cmd->add_option("--passages", embed_args.passages, "Passage collection");
    embed_cmd->add_option("--out", embed_args.out, "Vector file output path")->required();
    embed_cmd->add_option("--embedder", embed_args.embedder, "hashing|topic");
    embed_cmd->add_option("--dim", embed_args.dim, "Embedding dimension");

    GenerateArgs generate_args;
    auto* generate_cmd = app.add_subcommand("generate", "Generate candidate pools per session");
    generate_cmd->add_option("--sessions", generate_args.sessions, "Sessions JSONL")->required();
    generate_cmd->add_option("--fixture", generate_args.fixture, "Fixture JSONL to replay");
    generate_cmd->add_flag("--http", generate_args.use_http,
                           "Use the HTTP client (GENERATION_* env vars)");
    generate_cmd->add_option("--template", generate_args.template_path, "Prompt template JSON");
    generate_cmd->add_option("--out", generate_args.out, "Candidate pools JSONL")->required();
    generate_cmd->add_option("--n", generate_args.n, "Candidates per session");
    generate_cmd->add_option("--temperature", generate_args.temperature, "Sampling temperature");
    generate_cmd->add_option("--seed-base", generate_args.seed_base, "Request seed base");
    generate_cmd->add_option("--max-attempts", generate_args.max_attempts, "Retries per request");
    generate_cmd->add_option("--max-in-flight", generate_args.max_in_flight,
                             "Concurrent requests");

    AssessArgs assess_args;
    auto* assess_cmd =
        app.add_subcommand("assess", "Label candidate pools by end-to-end retrieval");
    assess_cmd->add_option("--pools", assess_args.pools, "Candidate pools JSONL")->required();
    assess_cmd->add_option("--index", assess_args.index, "Sparse index file")->required();
    assess_cmd->add_option("--vectors", assess_args.vectors, "Dense vector file")->required();
    assess_cmd->add_option("--embedder", assess_args.embedder, "hashing|topic");
    assess_cmd->add_option("--dim", assess_args.dim, "Query embedding dimension");
    assess_cmd->add_option("--qrels", assess_args.qrels, "Qrels file")->required();
    assess_cmd->add_option("--depth", assess_args.depth, "Gold rank lookup depth");
    assess_cmd->add_option("--rel-threshold", assess_args.rel_threshold,
                           "Minimum grade counted as gold");
    assess_cmd->add_option("--out", assess_args.out, "Assessments JSONL")->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train the reward model");
    train_cmd->add_option("--assessments", train_args.assessments, "Assessments JSONL")
        ->required();
    train_cmd->add_option("--candidates", train_args.candidates, "Candidate pools JSONL")
        ->required();
    train_cmd->add_option("--sessions", train_args.sessions, "Sessions JSONL")->required();
    train_cmd->add_option("--out", train_args.out, "Model checkpoint path")->required();
    train_cmd->add_option("--seed", train_args.seed, "Training seed");
    train_cmd->add_option("--margin", train_args.margin, "Ranking margin");
    train_cmd->add_option("--lr", train_args.lr, "Learning rate");
    train_cmd->add_option("--epochs", train_args.epochs, "Training epochs");
    train_cmd->add_option("--warmup", train_args.warmup, "Warmup fraction");
    train_cmd->add_option("--hidden", train_args.hidden, "Hidden layer width");
    train_cmd->add_option("--hash-dim", train_args.hash_dim, "Hashed features per sub-block");
    train_cmd->add_flag("--no-history", train_args.no_history,
                        "Drop conversational history from the encoder");

    SelectArgs select_args;
    auto* select_cmd = app.add_subcommand("select", "Select candidates from pools");
    select_cmd->add_option("--pools", select_args.pools, "Candidate pools JSONL")->required();
    select_cmd->add_option("--sessions", select_args.sessions, "Sessions JSONL")->required();
    select_cmd->add_option("--strategy", select_args.strategy,
                           "first|random|oracle|reward|mean")->required();
    select_cmd->add_option("--budget", select_args.budgets, "Budgets N (ascending)");
    select_cmd->add_option("--model", select_args.model, "Reward model checkpoint");
    select_cmd->add_option("--assessments", select_args.assessments,
                           "Assessments JSONL (oracle)");
    select_cmd->add_option("--seed", select_args.seed, "Random strategy seed");
    select_cmd->add_option("--embedder", select_args.embedder, "hashing|topic (mean/dense run)");
    select_cmd->add_option("--dim", select_args.dim, "Embedder dimension");
    select_cmd->add_option("--out", select_args.out, "Selections JSONL")->required();
    select_cmd->add_option("--run-out", select_args.run_out, "Also write a TREC run here");
    select_cmd->add_option("--index", select_args.index, "Sparse index for --run-out");
    select_cmd->add_option("--vectors", select_args.vectors, "Dense vectors for --run-out");
    select_cmd->add_option("--depth", select_args.depth, "Run depth");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a TREC run against qrels");
    eval_cmd->add_option("--run", eval_args.run, "TREC run file")->required();
    eval_cmd->add_option("--qrels", eval_args.qrels, "Qrels file")->required();
    eval_cmd->add_option("--mrr-cutoff", eval_args.mrr_cutoff,
                         "MRR rank cutoff (0 = full depth)");
    eval_cmd->add_option("--rel-threshold", eval_args.rel_threshold,
                         "Minimum grade counted as relevant");
    eval_cmd->add_flag("--per-query", eval_args.per_query, "Include per-query metrics");
    eval_cmd->add_option("--tsv", eval_args.tsv, "Also write a TSV summary here");

    std::string pipeline_config, pipeline_out;
    auto* pipeline_cmd =
        app.add_subcommand("pipeline", "Run generate->assess->train->select->eval");
    pipeline_cmd->add_option("--config", pipeline_config, "Pipeline config JSON")->required();
    pipeline_cmd->add_option("--out-dir", pipeline_out, "Override the configured output dir");

    CLI11_PARSE(app, argc, argv);

    try {
        if (index_cmd->parsed()) return cmd_index(index_args);
        if (embed_cmd->parsed()) return cmd_embed(embed_args);
        if (generate_cmd->parsed()) return cmd_generate(generate_args);
        if (assess_cmd->parsed()) return cmd_assess(assess_args);
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (select_cmd->parsed()) return cmd_select(select_args);
        if (eval_cmd->parsed()) return cmd_eval(eval_args);
        if (pipeline_cmd->parsed()) return cmd_pipeline(pipeline_config, pipeline_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
