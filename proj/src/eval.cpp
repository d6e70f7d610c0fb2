#include "bon/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "bon/errors.hpp"

namespace bon {

namespace {

bool is_relevant(const std::map<std::string, int>& grades, const std::string& passage_id,
                 int rel_threshold) {
    auto it = grades.find(passage_id);
    return it != grades.end() && it->second >= rel_threshold;
}

// Shortest exact decimal representation of a double, so serialized runs
// parse back bit-identically.
std::string format_score(double v) {
    char buf[64];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

} // namespace

double mrr(std::span<const RunEntry> run, const std::map<std::string, int>& grades, int cutoff,
           int rel_threshold) {
    for (const RunEntry& entry : run) {
        if (cutoff > 0 && entry.rank > cutoff) break;
        if (is_relevant(grades, entry.passage_id, rel_threshold))
            return 1.0 / static_cast<double>(entry.rank);
    }
    return 0.0;
}

double ndcg_at_k(std::span<const RunEntry> run, const std::map<std::string, int>& grades, int k) {
    if (k < 1) throw std::invalid_argument("ndcg: k must be >= 1");
    double dcg = 0.0;
    for (const RunEntry& entry : run) {
        if (entry.rank > k) break;
        auto it = grades.find(entry.passage_id);
        if (it != grades.end() && it->second > 0)
            dcg += static_cast<double>(it->second) / std::log2(static_cast<double>(entry.rank) + 1.0);
    }
    std::vector<int> positive;
    for (const auto& [id, grade] : grades) {
        if (grade > 0) positive.push_back(grade);
    }
    if (positive.empty()) return 0.0;
    std::sort(positive.begin(), positive.end(), std::greater<int>());
    double idcg = 0.0;
    for (int i = 0; i < k && i < static_cast<int>(positive.size()); ++i)
        idcg += static_cast<double>(positive[static_cast<size_t>(i)]) /
                std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

double recall_at_k(std::span<const RunEntry> run, const std::map<std::string, int>& grades, int k,
                   int rel_threshold) {
    if (k < 1) throw std::invalid_argument("recall: k must be >= 1");
    int relevant = 0;
    for (const auto& [id, grade] : grades) {
        if (grade >= rel_threshold) ++relevant;
    }
    if (relevant == 0) return 0.0;
    int hits = 0;
    for (const RunEntry& entry : run) {
        if (entry.rank > k) break;
        if (is_relevant(grades, entry.passage_id, rel_threshold)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(relevant);
}

MetricReport evaluate_run(const TrecRun& run, const Qrels& qrels, const EvalOptions& options) {
    MetricReport report;
    double sum_mrr = 0.0;
    double sum_ndcg = 0.0;
    double sum_recall = 0.0;

    for (const auto& [query_id, entries] : run.by_query) {
        auto qit = qrels.grades.find(query_id);
        if (qit == qrels.grades.end()) {
            ++report.skipped_missing_qrels;
            continue;
        }
        const std::map<std::string, int>& grades = qit->second;
        QueryMetrics qm;
        qm.mrr = mrr(entries, grades, options.mrr_cutoff, options.rel_threshold);
        qm.ndcg = ndcg_at_k(entries, grades, options.ndcg_k);
        qm.recall = recall_at_k(entries, grades, options.recall_k, options.rel_threshold);
        for (const auto& [id, grade] : grades) {
            if (grade >= options.rel_threshold) {
                qm.has_relevant = true;
                break;
            }
        }
        sum_mrr += qm.mrr;
        sum_ndcg += qm.ndcg;
        if (qm.has_relevant) {
            sum_recall += qm.recall;
            ++report.recall_queries;
        }
        ++report.evaluated_queries;
        report.per_query.emplace(query_id, qm);
    }

    if (report.evaluated_queries == 0)
        throw EvalError("run and qrels share no query ids");
    report.mean_mrr = sum_mrr / report.evaluated_queries;
    report.mean_ndcg = sum_ndcg / report.evaluated_queries;
    report.mean_recall = report.recall_queries > 0 ? sum_recall / report.recall_queries : 0.0;
    return report;
}

TrecRun read_trec_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    TrecRun run;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, q0, pid, tag;
        int rank = 0;
        double score = 0.0;
        if (!(ss >> qid >> q0 >> pid >> rank >> score >> tag))
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 'qid Q0 passage_id rank score tag'");
        std::vector<RunEntry>& entries = run.by_query[qid];
        if (rank != static_cast<int>(entries.size()) + 1)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": rank " +
                            std::to_string(rank) + " breaks contiguity for query '" + qid + "'");
        if (!entries.empty() && score > entries.back().score)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": scores must be non-increasing for query '" + qid + "'");
        entries.push_back(RunEntry{pid, rank, score});
        run.tag = tag;
    }
    return run;
}

void write_trec_run(const std::filesystem::path& path, const TrecRun& run) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [qid, entries] : run.by_query) {
        for (const RunEntry& entry : entries) {
            out << qid << " Q0 " << entry.passage_id << ' ' << entry.rank << ' '
                << format_score(entry.score) << ' ' << run.tag << '\n';
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
}

void add_query_result(TrecRun& run, const std::string& query_id, const RetrievalResult& result) {
    std::vector<RunEntry>& entries = run.by_query[query_id];
    for (size_t r = 0; r < result.entries.size(); ++r) {
        entries.push_back(RunEntry{result.entries[r].passage_id, static_cast<int>(r) + 1,
                                   result.entries[r].score});
    }
    if (entries.empty()) entries.push_back(RunEntry{"-", 1, 0.0});
}

Qrels read_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Qrels qrels;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, zero, pid;
        int grade = 0;
        if (!(ss >> qid >> zero >> pid >> grade))
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 'qid 0 passage_id grade'");
        if (grade < 0)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": negative grade for query '" + qid + "'");
        auto [it, inserted] = qrels.grades[qid].emplace(pid, grade);
        if (!inserted)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": duplicate qrels entry (" +
                            qid + ", " + pid + ")");
    }
    return qrels;
}

void write_qrels(const std::filesystem::path& path, const Qrels& qrels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [qid, grades] : qrels.grades) {
        for (const auto& [pid, grade] : grades)
            out << qid << " 0 " << pid << ' ' << grade << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<GoldLabel> gold_labels_from_qrels(const Qrels& qrels, int rel_threshold) {
    std::vector<GoldLabel> labels;
    for (const auto& [qid, grades] : qrels.grades) {
        size_t sep = qid.rfind('_');
        if (sep == std::string::npos || sep + 1 >= qid.size())
            throw DataError("qrels query id '" + qid +
                            "' is not of the form <session_id>_<turn_index>");
        GoldLabel label;
        label.session.session_id = qid.substr(0, sep);
        try {
            label.session.turn_index = std::stoi(qid.substr(sep + 1));
        } catch (const std::exception&) {
            throw DataError("qrels query id '" + qid + "' has a non-numeric turn index");
        }
        label.graded_relevance = grades;
        for (const auto& [pid, grade] : grades) {
            if (grade >= rel_threshold) label.gold_passage_ids.insert(pid);
        }
        if (label.gold_passage_ids.empty()) continue; // nothing to assess against
        labels.push_back(std::move(label));
    }
    return labels;
}

nlohmann::json report_to_json(const MetricReport& report, bool per_query) {
    nlohmann::json j;
    j["strategy"] = report.strategy;
    j["budget"] = report.budget;
    j["mean"] = {{"mrr", report.mean_mrr},
                 {"ndcg_at_3", report.mean_ndcg},
                 {"recall_at_10", report.mean_recall}};
    j["evaluated_queries"] = report.evaluated_queries;
    j["recall_queries"] = report.recall_queries;
    j["skipped_missing_qrels"] = report.skipped_missing_qrels;
    if (per_query) {
        nlohmann::json q = nlohmann::json::object();
        for (const auto& [qid, qm] : report.per_query)
            q[qid] = {{"mrr", qm.mrr}, {"ndcg_at_3", qm.ndcg}, {"recall_at_10", qm.recall}};
        j["per_query"] = std::move(q);
    }
    return j;
}

void write_report_tsv(const std::filesystem::path& path, std::span<const MetricReport> reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "strategy\tbudget\tmrr\tndcg_at_3\trecall_at_10\tqueries\n";
    for (const MetricReport& report : reports) {
        out << report.strategy << '\t' << report.budget << '\t' << format_score(report.mean_mrr)
            << '\t' << format_score(report.mean_ndcg) << '\t'
            << format_score(report.mean_recall) << '\t' << report.evaluated_queries << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace bon
