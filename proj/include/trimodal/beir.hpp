#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "trimodal/error.hpp"
#include "trimodal/metrics.hpp"
#include "trimodal/types.hpp"

namespace trimodal {

struct BeirDataset {
    std::vector<Document> corpus;
    std::vector<Query> queries;
    QrelSet qrels;
};

namespace detail {

inline nlohmann::json parse_json_line(const std::string& line, const std::filesystem::path& file,
                                      std::size_t line_no) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        fail(ErrorKind::Data, file.string() + ":" + std::to_string(line_no) + ": malformed JSON line");
    }
    return j;
}

inline std::ifstream open_or_fail(const std::filesystem::path& file) {
    std::ifstream f(file);
    if (!f) fail(ErrorKind::Data, "missing file: " + file.string());
    return f;
}

}  // namespace detail

// corpus.jsonl: one {"_id", "title", "text"} object per line.
inline std::vector<Document> load_beir_corpus(const std::filesystem::path& file) {
    auto f = detail::open_or_fail(file);
    std::vector<Document> corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto j = detail::parse_json_line(line, file, line_no);
        if (!j.contains("_id") || !j.contains("text")) {
            fail(ErrorKind::Data, file.string() + ":" + std::to_string(line_no) + ": missing _id/text");
        }
        Document doc;
        doc.id = j.at("_id").get<std::string>();
        doc.title = j.value("title", std::string{});
        doc.text = j.at("text").get<std::string>();
        corpus.push_back(std::move(doc));
    }
    return corpus;
}

// queries.jsonl: one {"_id", "text"} object per line.
inline std::vector<Query> load_beir_queries(const std::filesystem::path& file) {
    auto f = detail::open_or_fail(file);
    std::vector<Query> queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto j = detail::parse_json_line(line, file, line_no);
        if (!j.contains("_id") || !j.contains("text")) {
            fail(ErrorKind::Data, file.string() + ":" + std::to_string(line_no) + ": missing _id/text");
        }
        queries.push_back({j.at("_id").get<std::string>(), j.at("text").get<std::string>()});
    }
    return queries;
}

// Qrels TSV with the conventional header line (query-id, corpus-id, score).
// Duplicate judgment lines: last one wins, with a warning. Judgments naming
// unknown query/doc ids are kept, with a warning.
inline QrelSet load_beir_qrels(const std::filesystem::path& file,
                               const std::unordered_set<std::string>* known_queries = nullptr,
                               const std::unordered_set<std::string>* known_docs = nullptr,
                               std::ostream* warn = nullptr) {
    auto f = detail::open_or_fail(file);
    QrelSet qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (line_no == 1 && cols.size() >= 3 && cols[0] == "query-id") continue;  // header
        if (cols.size() != 3) {
            fail(ErrorKind::Data,
                 file.string() + ":" + std::to_string(line_no) + ": expected 3 tab-separated columns");
        }
        int grade = 0;
        try {
            grade = std::stoi(cols[2]);
        } catch (const std::exception&) {
            fail(ErrorKind::Data, file.string() + ":" + std::to_string(line_no) + ": non-numeric score");
        }
        if (grade < 0) {
            fail(ErrorKind::Data, file.string() + ":" + std::to_string(line_no) + ": negative score");
        }

        if (warn && known_queries && !known_queries->count(cols[0])) {
            *warn << "warning: " << file.string() << ":" << line_no << ": unknown query-id " << cols[0]
                  << "\n";
        }
        if (warn && known_docs && !known_docs->count(cols[1])) {
            *warn << "warning: " << file.string() << ":" << line_no << ": unknown corpus-id " << cols[1]
                  << "\n";
        }
        auto& by_doc = qrels.judgments[cols[0]];
        auto [it, inserted] = by_doc.emplace(cols[1], grade);
        if (!inserted) {
            if (warn) {
                *warn << "warning: " << file.string() << ":" << line_no
                      << ": duplicate judgment for (" << cols[0] << ", " << cols[1]
                      << "), last wins\n";
            }
            it->second = grade;
        }
    }
    return qrels;
}

inline BeirDataset load_beir(const std::filesystem::path& dir,
                             const std::string& qrels_file = "qrels/test.tsv",
                             std::ostream* warn = nullptr) {
    BeirDataset ds;
    ds.corpus = load_beir_corpus(dir / "corpus.jsonl");
    ds.queries = load_beir_queries(dir / "queries.jsonl");

    std::unordered_set<std::string> doc_ids;
    for (const auto& d : ds.corpus) doc_ids.insert(d.id);
    std::unordered_set<std::string> query_ids;
    for (const auto& q : ds.queries) query_ids.insert(q.id);

    ds.qrels = load_beir_qrels(dir / qrels_file, &query_ids, &doc_ids, warn);
    return ds;
}

// Entity sidecar: one {"doc_id": ..., "entities": [...]} object per line.
// Documents listed here bypass the heuristic extractor.
inline std::unordered_map<std::string, std::vector<std::string>> load_entity_sidecar(
    const std::filesystem::path& file) {
    auto f = detail::open_or_fail(file);
    std::unordered_map<std::string, std::vector<std::string>> sidecar;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto j = detail::parse_json_line(line, file, line_no);
        if (!j.contains("doc_id") || !j.contains("entities") || !j.at("entities").is_array()) {
            fail(ErrorKind::Data,
                 file.string() + ":" + std::to_string(line_no) + ": expected doc_id and entities[]");
        }
        sidecar[j.at("doc_id").get<std::string>()] =
            j.at("entities").get<std::vector<std::string>>();
    }
    return sidecar;
}

}  // namespace trimodal
