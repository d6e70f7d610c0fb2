#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "bon/dense.hpp"
#include "bon/encoder.hpp"
#include "bon/eval.hpp"
#include "bon/generation.hpp"
#include "bon/reward.hpp"
#include "bon/sparse.hpp"

namespace bon {

// One JSON document with a section per stage; see PipelineConfig::load.
struct PipelineConfig {
    std::uint64_t seed = 7;

    std::filesystem::path passages;
    std::filesystem::path vectors;        // optional; embeds passages when empty
    std::filesystem::path sessions_train;
    std::filesystem::path sessions_eval;  // optional; defaults to the train split
    std::filesystem::path fixture;
    std::filesystem::path qrels;
    std::filesystem::path out_dir;
    std::filesystem::path prompt_template; // optional; builtin when empty

    Bm25Params bm25;
    int depth = kDefaultAssessmentDepth;
    std::string embedder_type = "hashing"; // or "topic"
    int embedder_dim = 1024;

    GenerationConfig generation;
    EncoderConfig encoder;
    TrainingConfig training;

    std::vector<std::string> strategies{"first", "oracle", "reward"};
    std::vector<int> budgets{1, 2, 4, 8, 16};
    std::string run_system = "sparse"; // or "dense"; mean aggregation is always dense

    EvalOptions eval;

    static PipelineConfig load(const std::filesystem::path& path);
    void validate() const;
};

struct PipelineOutputs {
    std::filesystem::path candidates_train;
    std::filesystem::path candidates_eval;
    std::filesystem::path assessments_train;
    std::filesystem::path assessments_eval;
    std::filesystem::path model_checkpoint;
    std::filesystem::path selections;
    std::vector<std::filesystem::path> runs;
    std::filesystem::path report_json;
    std::filesystem::path report_tsv;
    std::vector<MetricReport> reports;
};

std::unique_ptr<QueryEmbedder> make_embedder(const std::string& type, int dimension);

// Chains generate -> assess -> train -> select -> eval, writing every
// intermediate artifact under out_dir. Fully deterministic for a fixed
// config and fixture.
PipelineOutputs run_pipeline(const PipelineConfig& config);

} // namespace bon
