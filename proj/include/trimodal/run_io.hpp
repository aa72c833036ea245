#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "trimodal/error.hpp"
#include "trimodal/metrics.hpp"

namespace trimodal {

namespace detail {

// Shortest round-trip decimal form, reproducible across runs.
inline std::string format_score(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace detail

// TREC run format: query_id Q0 doc_id rank score run_tag, tab-separated.
inline void write_trec_run(const RunResult& run, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ErrorKind::Data, "cannot open for writing: " + path.string());
    for (const auto& [qid, hits] : run.per_query) {
        for (std::size_t i = 0; i < hits.size(); ++i) {
            f << qid << "\tQ0\t" << hits[i].doc_id << '\t' << (i + 1) << '\t'
              << detail::format_score(hits[i].score) << '\t' << run.meta.run_tag << '\n';
        }
    }
    if (!f) fail(ErrorKind::Data, "write failed: " + path.string());
}

inline nlohmann::json run_metadata_json(const RunMetadata& meta, std::size_t query_count) {
    nlohmann::json j;
    j["config_hash"] = meta.config_hash;
    j["index_fingerprint"] = meta.index_fingerprint;
    j["rerank_mode"] = meta.rerank_mode;
    j["fallback_count"] = meta.fallback_count;
    j["run_tag"] = meta.run_tag;
    j["query_count"] = query_count;
    return j;
}

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ErrorKind::Data, "cannot open for writing: " + path.string());
    f << j.dump(2) << '\n';
    if (!f) fail(ErrorKind::Data, "write failed: " + path.string());
}

inline void write_text_file(const std::string& text, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ErrorKind::Data, "cannot open for writing: " + path.string());
    f << text;
    if (!f) fail(ErrorKind::Data, "write failed: " + path.string());
}

}  // namespace trimodal
