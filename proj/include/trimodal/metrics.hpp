#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trimodal/error.hpp"
#include "trimodal/index.hpp"

namespace trimodal {

// Relevance judgments: (query_id, doc_id) -> non-negative grade. Binary
// metrics treat grade >= 1 as relevant; nDCG uses the graded values.
struct QrelSet {
    std::map<std::string, std::map<std::string, int>> judgments;

    const std::map<std::string, int>* for_query(const std::string& query_id) const {
        auto it = judgments.find(query_id);
        return it == judgments.end() ? nullptr : &it->second;
    }

    static std::set<std::string> relevant_ids(const std::map<std::string, int>& grades) {
        std::set<std::string> out;
        for (const auto& [doc_id, grade] : grades) {
            if (grade >= 1) out.insert(doc_id);
        }
        return out;
    }
};

struct RunMetadata {
    std::string config_hash;
    std::string index_fingerprint;
    std::string rerank_mode = "none";
    std::uint64_t fallback_count = 0;
    std::string run_tag = "trimodal";
};

// Ranked retrieval output for a set of queries, in evaluation order.
struct RunResult {
    std::vector<std::pair<std::string, std::vector<SearchHit>>> per_query;
    RunMetadata meta;
};

// |relevant ∩ top-k| / k. The denominator is k even when fewer than k
// results were retrieved.
inline double precision_at_k(const std::vector<std::string>& ranked,
                             const std::set<std::string>& relevant, std::size_t k) {
    if (k == 0) fail(ErrorKind::Usage, "k must be >= 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        if (relevant.count(ranked[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

// |relevant ∩ top-k| / |relevant|.
inline double recall_at_k(const std::vector<std::string>& ranked,
                          const std::set<std::string>& relevant, std::size_t k) {
    if (relevant.empty()) fail(ErrorKind::Usage, "recall undefined with no relevant documents");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        if (relevant.count(ranked[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

// Reciprocal rank of the first relevant document within the top k, else 0.
inline double mrr_at_k(const std::vector<std::string>& ranked,
                       const std::set<std::string>& relevant, std::size_t k) {
    if (k == 0) fail(ErrorKind::Usage, "k must be >= 1");
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        if (relevant.count(ranked[i])) return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

// Exponential-gain nDCG: DCG@k = sum (2^rel_i - 1) / log2(i + 1), ideal DCG
// from the query's grades sorted descending.
inline double ndcg_at_k(const std::vector<std::string>& ranked,
                        const std::map<std::string, int>& grades, std::size_t k) {
    if (k == 0) fail(ErrorKind::Usage, "k must be >= 1");

    auto gain = [](int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; };
    auto discount = [](std::size_t rank1) { return std::log2(static_cast<double>(rank1) + 1.0); };

    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        auto it = grades.find(ranked[i]);
        if (it != grades.end() && it->second > 0) dcg += gain(it->second) / discount(i + 1);
    }

    std::vector<int> ideal;
    for (const auto& [doc_id, grade] : grades) {
        if (grade > 0) ideal.push_back(grade);
    }
    if (ideal.empty()) fail(ErrorKind::Usage, "ndcg undefined with all-zero grades");
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += gain(ideal[i]) / discount(i + 1);
    }
    return dcg / idcg;
}

// Mean over relevant documents of the precision at their retrieved ranks,
// denominator |relevant|; evaluated over the full retrieved list.
inline double average_precision(const std::vector<std::string>& ranked,
                                const std::set<std::string>& relevant) {
    if (relevant.empty()) fail(ErrorKind::Usage, "AP undefined with no relevant documents");
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (relevant.count(ranked[i])) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(relevant.size());
}

struct PerQueryMetrics {
    std::map<std::string, std::map<std::size_t, double>> at_k;  // metric -> cutoff -> value
    double ap = 0.0;
};

struct MetricReport {
    std::vector<std::size_t> cutoffs;
    std::map<std::string, std::map<std::size_t, double>> aggregates;
    double map = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped_no_positive = 0;
    std::size_t skipped_missing = 0;
    std::map<std::string, PerQueryMetrics> per_query;

    nlohmann::json to_json(bool include_per_query = true) const {
        nlohmann::json j;
        j["cutoffs"] = cutoffs;
        for (const auto& [metric, by_k] : aggregates) {
            for (const auto& [k, v] : by_k) j["metrics"][metric][std::to_string(k)] = v;
        }
        j["metrics"]["map"] = map;
        j["queries"]["evaluated"] = evaluated;
        j["queries"]["skipped_no_positive_qrels"] = skipped_no_positive;
        j["queries"]["skipped_missing"] = skipped_missing;
        if (include_per_query) {
            for (const auto& [qid, pq] : per_query) {
                nlohmann::json q;
                for (const auto& [metric, by_k] : pq.at_k) {
                    for (const auto& [k, v] : by_k) q[metric][std::to_string(k)] = v;
                }
                q["ap"] = pq.ap;
                j["per_query"][qid] = q;
            }
        }
        return j;
    }

    // Aligned text grid: one row per metric, one column per cutoff.
    std::string to_table(const std::string& heading = "") const {
        std::ostringstream os;
        os << std::fixed << std::setprecision(4);
        if (!heading.empty()) os << heading << "\n";
        os << std::left << std::setw(10) << "metric";
        for (auto k : cutoffs) os << std::right << std::setw(9) << ("k=" + std::to_string(k));
        os << "\n";
        static const std::vector<std::pair<std::string, std::string>> rows = {
            {"precision", "P@k"}, {"recall", "Recall@k"}, {"mrr", "MRR@k"}, {"ndcg", "nDCG@k"}};
        for (const auto& [key, label] : rows) {
            os << std::left << std::setw(10) << label;
            auto it = aggregates.find(key);
            for (auto k : cutoffs) {
                double v = 0.0;
                if (it != aggregates.end()) {
                    auto kit = it->second.find(k);
                    if (kit != it->second.end()) v = kit->second;
                }
                os << std::right << std::setw(9) << v;
            }
            os << "\n";
        }
        os << std::left << std::setw(10) << "MAP" << std::right << std::setw(9) << map << "\n";
        os << "evaluated queries: " << evaluated << " (skipped, no positive qrels: "
           << skipped_no_positive << "; skipped, missing from run: " << skipped_missing << ")\n";
        return os.str();
    }
};

// Scores a run against qrels at the given cutoffs. Queries without positive
// judgments, or present on only one side, are skipped and counted. Every
// aggregate is the arithmetic mean of per-query values.
inline MetricReport evaluate_run(const RunResult& run, const QrelSet& qrels,
                                 const std::vector<std::size_t>& cutoffs,
                                 std::ostream* warn = nullptr) {
    MetricReport report;
    report.cutoffs = cutoffs;

    std::set<std::string> run_query_ids;
    for (const auto& [qid, hits] : run.per_query) run_query_ids.insert(qid);
    for (const auto& [qid, grades] : qrels.judgments) {
        if (!run_query_ids.count(qid)) {
            ++report.skipped_missing;
            if (warn) *warn << "warning: query " << qid << " judged but absent from run\n";
        }
    }

    static const std::vector<std::string> metric_names = {"precision", "recall", "mrr", "ndcg"};
    std::map<std::string, std::map<std::size_t, double>> sums;
    double ap_sum = 0.0;

    for (const auto& [qid, hits] : run.per_query) {
        const auto* grades = qrels.for_query(qid);
        if (!grades) {
            ++report.skipped_missing;
            if (warn) *warn << "warning: query " << qid << " has no qrels entry\n";
            continue;
        }
        auto relevant = QrelSet::relevant_ids(*grades);
        if (relevant.empty()) {
            ++report.skipped_no_positive;
            continue;
        }

        std::vector<std::string> ranked;
        ranked.reserve(hits.size());
        for (const auto& hit : hits) ranked.push_back(hit.doc_id);

        PerQueryMetrics pq;
        for (auto k : cutoffs) {
            pq.at_k["precision"][k] = precision_at_k(ranked, relevant, k);
            pq.at_k["recall"][k] = recall_at_k(ranked, relevant, k);
            pq.at_k["mrr"][k] = mrr_at_k(ranked, relevant, k);
            pq.at_k["ndcg"][k] = ndcg_at_k(ranked, *grades, k);
        }
        pq.ap = average_precision(ranked, relevant);
        ap_sum += pq.ap;
        for (const auto& name : metric_names) {
            for (auto k : cutoffs) sums[name][k] += pq.at_k[name][k];
        }
        report.per_query.emplace(qid, std::move(pq));
        ++report.evaluated;
    }

    if (report.evaluated == 0) fail(ErrorKind::Data, "zero evaluable queries");

    for (const auto& name : metric_names) {
        for (auto k : cutoffs) {
            report.aggregates[name][k] = sums[name][k] / static_cast<double>(report.evaluated);
        }
    }
    report.map = ap_sum / static_cast<double>(report.evaluated);
    return report;
}

}  // namespace trimodal
