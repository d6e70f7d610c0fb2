#pragma once

// Shared helpers for the test suites: independent brute-force oracles for
// retrieval and metrics, plus deterministic RNG utilities. These stay
// deliberately naive and separate from the library implementations they
// cross-check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bon/eval.hpp"
#include "bon/retrieval.hpp"
#include "bon/text.hpp"

namespace testutil {

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) { // inclusive bounds
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// --- independent BM25 ----------------------------------------------------

// Recomputes document/term statistics directly from the raw corpus.
struct NaiveCorpusStats {
    std::vector<std::vector<std::string>> docs;
    std::vector<std::string> ids;
    double avgdl = 0.0;

    explicit NaiveCorpusStats(const std::vector<bon::Passage>& corpus) {
        double total = 0.0;
        for (const bon::Passage& p : corpus) {
            ids.push_back(p.passage_id);
            docs.push_back(bon::analyze(p.text));
            total += static_cast<double>(docs.back().size());
        }
        avgdl = corpus.empty() ? 0.0 : total / static_cast<double>(corpus.size());
    }

    int df(const std::string& term) const {
        int n = 0;
        for (const auto& doc : docs) {
            if (std::find(doc.begin(), doc.end(), term) != doc.end()) ++n;
        }
        return n;
    }

    int tf(const std::string& term, size_t doc_idx) const {
        int n = 0;
        for (const auto& t : docs[doc_idx]) {
            if (t == term) ++n;
        }
        return n;
    }
};

inline double naive_bm25(const NaiveCorpusStats& stats,
                         const std::vector<std::string>& query_tokens, size_t doc_idx, double k1,
                         double b) {
    double score = 0.0;
    double n_docs = static_cast<double>(stats.docs.size());
    double dl = static_cast<double>(stats.docs[doc_idx].size());
    for (const std::string& term : query_tokens) {
        int tf = stats.tf(term, doc_idx);
        if (tf == 0) continue;
        double df = static_cast<double>(stats.df(term));
        double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        double denom = tf + k1 * (1.0 - b + b * dl / stats.avgdl);
        score += idf * tf * (k1 + 1.0) / denom;
    }
    return score;
}

// Ranking of every matching document, sorted by (score desc, id asc).
inline std::vector<std::pair<std::string, double>> naive_sparse_ranking(
    const std::vector<bon::Passage>& corpus, const std::string& query, int depth, double k1,
    double b) {
    NaiveCorpusStats stats(corpus);
    std::vector<std::string> tokens = bon::analyze(query);
    std::vector<std::pair<std::string, double>> scored;
    for (size_t i = 0; i < corpus.size(); ++i) {
        bool matched = false;
        for (const std::string& t : tokens) {
            if (stats.tf(t, i) > 0) {
                matched = true;
                break;
            }
        }
        if (matched) scored.emplace_back(stats.ids[i], naive_bm25(stats, tokens, i, k1, b));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b2) {
        if (a.second != b2.second) return a.second > b2.second;
        return a.first < b2.first;
    });
    if (scored.size() > static_cast<size_t>(depth)) scored.resize(static_cast<size_t>(depth));
    return scored;
}

// Exhaustive inner-product ranking over a flat vector table.
inline std::vector<std::pair<std::string, double>> naive_dense_ranking(
    const std::vector<std::string>& ids, const std::vector<float>& data, int dim,
    const std::vector<float>& query, int depth) {
    std::vector<std::pair<std::string, double>> scored;
    for (size_t i = 0; i < ids.size(); ++i) {
        double dot = 0.0;
        for (int d = 0; d < dim; ++d)
            dot += static_cast<double>(data[i * static_cast<size_t>(dim) +
                                            static_cast<size_t>(d)]) *
                   static_cast<double>(query[static_cast<size_t>(d)]);
        scored.emplace_back(ids[i], dot);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b2) {
        if (a.second != b2.second) return a.second > b2.second;
        return a.first < b2.first;
    });
    if (scored.size() > static_cast<size_t>(depth)) scored.resize(static_cast<size_t>(depth));
    return scored;
}

// --- independent metrics --------------------------------------------------

inline double naive_mrr(const std::vector<bon::RunEntry>& run,
                        const std::map<std::string, int>& grades, int cutoff,
                        int rel_threshold) {
    for (size_t i = 0; i < run.size(); ++i) {
        int rank = static_cast<int>(i) + 1;
        if (cutoff > 0 && rank > cutoff) break;
        auto it = grades.find(run[i].passage_id);
        if (it != grades.end() && it->second >= rel_threshold)
            return 1.0 / static_cast<double>(rank);
    }
    return 0.0;
}

inline double naive_ndcg(const std::vector<bon::RunEntry>& run,
                         const std::map<std::string, int>& grades, int k) {
    double dcg = 0.0;
    for (size_t i = 0; i < run.size() && static_cast<int>(i) < k; ++i) {
        auto it = grades.find(run[i].passage_id);
        if (it != grades.end())
            dcg += static_cast<double>(it->second) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> all;
    for (const auto& [id, g] : grades) {
        if (g > 0) all.push_back(g);
    }
    if (all.empty()) return 0.0;
    std::sort(all.rbegin(), all.rend());
    double idcg = 0.0;
    for (size_t i = 0; i < all.size() && static_cast<int>(i) < k; ++i)
        idcg += static_cast<double>(all[i]) / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

inline double naive_recall(const std::vector<bon::RunEntry>& run,
                           const std::map<std::string, int>& grades, int k, int rel_threshold) {
    std::set<std::string> relevant;
    for (const auto& [id, g] : grades) {
        if (g >= rel_threshold) relevant.insert(id);
    }
    if (relevant.empty()) return 0.0;
    int hits = 0;
    for (size_t i = 0; i < run.size() && static_cast<int>(i) < k; ++i) {
        if (relevant.count(run[i].passage_id)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

// Random lowercase word of 1-6 chars from a small alphabet, so corpora get
// meaningful term overlap.
inline std::string random_word(std::mt19937_64& rng, int alphabet = 8) {
    int len = uniform_int(rng, 1, 6);
    std::string w;
    for (int i = 0; i < len; ++i)
        w.push_back(static_cast<char>('a' + uniform_int(rng, 0, alphabet - 1)));
    return w;
}

} // namespace testutil
