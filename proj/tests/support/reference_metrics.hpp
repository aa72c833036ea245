#pragma once

// Independent brute-force ranking-metric scorer, used as the oracle for the
// evaluation module. Deliberately shares no code with the library: plain
// loops, its own relevance handling, its own aggregation.

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace refmetrics {

struct RefRun {
    // query -> ranked doc ids (best first)
    std::map<std::string, std::vector<std::string>> ranking;
};

struct RefQrels {
    // query -> doc -> grade
    std::map<std::string, std::map<std::string, int>> grades;
};

inline bool ref_is_relevant(const RefQrels& qrels, const std::string& q, const std::string& d) {
    auto qit = qrels.grades.find(q);
    if (qit == qrels.grades.end()) return false;
    auto dit = qit->second.find(d);
    return dit != qit->second.end() && dit->second >= 1;
}

inline int ref_grade(const RefQrels& qrels, const std::string& q, const std::string& d) {
    auto qit = qrels.grades.find(q);
    if (qit == qrels.grades.end()) return 0;
    auto dit = qit->second.find(d);
    return dit == qit->second.end() ? 0 : dit->second;
}

inline std::size_t ref_total_relevant(const RefQrels& qrels, const std::string& q) {
    std::size_t n = 0;
    auto qit = qrels.grades.find(q);
    if (qit == qrels.grades.end()) return 0;
    for (const auto& [d, g] : qit->second) {
        if (g >= 1) ++n;
    }
    return n;
}

inline double ref_precision(const RefRun& run, const RefQrels& qrels, const std::string& q,
                            std::size_t k) {
    const auto& ranked = run.ranking.at(q);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (ref_is_relevant(qrels, q, ranked[i])) ++hits;
    }
    return double(hits) / double(k);
}

inline double ref_recall(const RefRun& run, const RefQrels& qrels, const std::string& q,
                         std::size_t k) {
    const auto& ranked = run.ranking.at(q);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (ref_is_relevant(qrels, q, ranked[i])) ++hits;
    }
    return double(hits) / double(ref_total_relevant(qrels, q));
}

inline double ref_mrr(const RefRun& run, const RefQrels& qrels, const std::string& q,
                      std::size_t k) {
    const auto& ranked = run.ranking.at(q);
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (ref_is_relevant(qrels, q, ranked[i])) return 1.0 / double(i + 1);
    }
    return 0.0;
}

inline double ref_ndcg(const RefRun& run, const RefQrels& qrels, const std::string& q,
                       std::size_t k) {
    const auto& ranked = run.ranking.at(q);
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        int g = ref_grade(qrels, q, ranked[i]);
        dcg += (std::pow(2.0, double(g)) - 1.0) / (std::log(double(i) + 2.0) / std::log(2.0));
    }
    std::vector<int> all_grades;
    for (const auto& [d, g] : qrels.grades.at(q)) {
        if (g > 0) all_grades.push_back(g);
    }
    // ideal: grades sorted descending
    for (std::size_t i = 0; i + 1 < all_grades.size(); ++i) {
        for (std::size_t j = i + 1; j < all_grades.size(); ++j) {
            if (all_grades[j] > all_grades[i]) std::swap(all_grades[i], all_grades[j]);
        }
    }
    double idcg = 0.0;
    for (std::size_t i = 0; i < all_grades.size() && i < k; ++i) {
        idcg += (std::pow(2.0, double(all_grades[i])) - 1.0) /
                (std::log(double(i) + 2.0) / std::log(2.0));
    }
    return dcg / idcg;
}

inline double ref_average_precision(const RefRun& run, const RefQrels& qrels,
                                    const std::string& q) {
    const auto& ranked = run.ranking.at(q);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ref_is_relevant(qrels, q, ranked[i])) {
            ++hits;
            sum += double(hits) / double(i + 1);
        }
    }
    return sum / double(ref_total_relevant(qrels, q));
}

// Queries evaluated: present in the run and holding at least one positive
// grade. Aggregates are plain means.
inline std::vector<std::string> ref_evaluable_queries(const RefRun& run, const RefQrels& qrels) {
    std::vector<std::string> out;
    for (const auto& [q, ranked] : run.ranking) {
        if (ref_total_relevant(qrels, q) >= 1) out.push_back(q);
    }
    return out;
}

inline double ref_mean_metric(const RefRun& run, const RefQrels& qrels, const std::string& name,
                              std::size_t k) {
    auto queries = ref_evaluable_queries(run, qrels);
    double sum = 0.0;
    for (const auto& q : queries) {
        if (name == "precision") sum += ref_precision(run, qrels, q, k);
        else if (name == "recall") sum += ref_recall(run, qrels, q, k);
        else if (name == "mrr") sum += ref_mrr(run, qrels, q, k);
        else if (name == "ndcg") sum += ref_ndcg(run, qrels, q, k);
    }
    return sum / double(queries.size());
}

inline double ref_map(const RefRun& run, const RefQrels& qrels) {
    auto queries = ref_evaluable_queries(run, qrels);
    double sum = 0.0;
    for (const auto& q : queries) sum += ref_average_precision(run, qrels, q);
    return sum / double(queries.size());
}

}  // namespace refmetrics
