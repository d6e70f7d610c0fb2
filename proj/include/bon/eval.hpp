#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bon/retrieval.hpp"
#include "bon/types.hpp"

namespace bon {

// One ranked run entry. Entries for a query are kept in rank order.
struct RunEntry {
    std::string passage_id;
    int rank = 0;
    double score = 0.0;

    bool operator==(const RunEntry&) const = default;
};

// Ranked retrieval output keyed by query id. Ranks are contiguous from 1
// and scores non-increasing within each query.
struct TrecRun {
    std::map<std::string, std::vector<RunEntry>> by_query;
    std::string tag = "run";

    bool operator==(const TrecRun&) const = default;
};

// query_id -> passage_id -> relevance grade (>= 0).
struct Qrels {
    std::map<std::string, std::map<std::string, int>> grades;
};

struct EvalOptions {
    // 0 means the full run depth (pytrec_eval's recip_rank convention).
    int mrr_cutoff = 0;
    int ndcg_k = 3;
    int recall_k = 10;
    // Grades >= this count as relevant for MRR and Recall.
    int rel_threshold = 1;
};

struct QueryMetrics {
    double mrr = 0.0;
    double ndcg = 0.0;
    double recall = 0.0;
    bool has_relevant = false; // false: excluded from the Recall mean
};

struct MetricReport {
    std::map<std::string, QueryMetrics> per_query;
    double mean_mrr = 0.0;
    double mean_ndcg = 0.0;
    double mean_recall = 0.0;
    int evaluated_queries = 0;
    int recall_queries = 0;          // queries entering the Recall mean
    int skipped_missing_qrels = 0;   // run queries absent from qrels
    std::string strategy;            // provenance, filled by callers
    int budget = 0;
};

// Reciprocal rank of the first relevant passage within the cutoff
// (cutoff 0 = full depth); 0 when none is found.
double mrr(std::span<const RunEntry> run, const std::map<std::string, int>& grades,
           int cutoff = 10, int rel_threshold = 1);

// Graded NDCG with linear gain grade/log2(rank+1); 0 when the query has no
// positively graded passage.
double ndcg_at_k(std::span<const RunEntry> run, const std::map<std::string, int>& grades,
                 int k = 3);

// |relevant in top-k| / |relevant|. Returns 0 when there are no relevant
// passages; callers exclude such queries from means.
double recall_at_k(std::span<const RunEntry> run, const std::map<std::string, int>& grades,
                   int k = 10, int rel_threshold = 1);

// Per-query metrics plus arithmetic means over evaluated queries. Run
// queries missing from qrels are skipped and counted; throws EvalError when
// no query is shared.
MetricReport evaluate_run(const TrecRun& run, const Qrels& qrels, const EvalOptions& options = {});

// TREC run line: `qid Q0 passage_id rank score tag`. Parsing validates rank
// contiguity and score monotonicity; serialization round-trips exactly.
TrecRun read_trec_run(const std::filesystem::path& path);
void write_trec_run(const std::filesystem::path& path, const TrecRun& run);

// Appends a retrieval result as one query's ranked entries. An empty result
// becomes a single zero-score placeholder line ("-"), so the query still
// scores 0 instead of silently vanishing from the serialized run.
void add_query_result(TrecRun& run, const std::string& query_id, const RetrievalResult& result);

// Qrels line: `qid 0 passage_id grade`. Duplicate (qid, passage) pairs are
// rejected.
Qrels read_qrels(const std::filesystem::path& path);
void write_qrels(const std::filesystem::path& path, const Qrels& qrels);

// Gold labels (one per query id of the form "<session>_<turn>") from qrels;
// passages with grade >= rel_threshold become gold ids.
std::vector<GoldLabel> gold_labels_from_qrels(const Qrels& qrels, int rel_threshold = 1);

nlohmann::json report_to_json(const MetricReport& report, bool per_query = false);
void write_report_tsv(const std::filesystem::path& path, std::span<const MetricReport> reports);

} // namespace bon
