#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trimodal/digest.hpp"
#include "trimodal/encoder.hpp"
#include "trimodal/error.hpp"
#include "trimodal/rerank.hpp"

namespace trimodal {

struct RerankConfig {
    RerankMode mode = RerankMode::None;
    std::string endpoint = "builtin:mock";  // builtin:mock or an HTTP base URL
    std::string model = "gpt-4o";
    std::size_t candidate_cap = 10;
    std::size_t snippet_chars = 300;
    ModalityWeights static_weights;  // fallback weights
    int timeout_ms = 30000;
    int retries = 2;
    MockLlmClient::Options mock;
};

// One declarative description of the whole pipeline; flags may override
// individual fields. Paths are resolved relative to the config file.
struct PipelineConfig {
    std::filesystem::path dataset_dir;
    std::string qrels_file = "qrels/test.tsv";
    std::optional<std::filesystem::path> entity_sidecar;

    EncoderProfile encoder{"test-hash", 64, "builtin:test", 42};
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    std::size_t max_vocab = 1024;

    RerankConfig rerank;

    std::vector<std::size_t> cutoffs = {1, 3, 5, 10};
    std::size_t k = 10;
    std::size_t workers = 4;
    std::size_t embed_batch = 32;
    std::uint64_t seed = 42;
    std::string run_tag = "trimodal";

    std::filesystem::path index_path;
    std::filesystem::path output_dir;

    nlohmann::json raw;  // canonical parsed form, used for hashing

    std::string config_hash() const {
        return "fnv1a64:" + std::to_string(fnv1a64(raw.dump()));
    }
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) try {
    PipelineConfig cfg;
    cfg.raw = j;

    if (j.contains("dataset_dir")) {
        cfg.dataset_dir = detail::resolve(base_dir, j.at("dataset_dir").get<std::string>());
    }
    cfg.qrels_file = j.value("qrels_file", cfg.qrels_file);
    if (j.contains("entity_sidecar")) {
        cfg.entity_sidecar = detail::resolve(base_dir, j.at("entity_sidecar").get<std::string>());
    }

    if (j.contains("encoder")) {
        const auto& e = j.at("encoder");
        cfg.encoder.name = e.value("name", cfg.encoder.name);
        cfg.encoder.endpoint = e.value("endpoint", cfg.encoder.endpoint);
        if (e.contains("dim")) {
            cfg.encoder.dim = e.at("dim").get<std::uint32_t>();
        } else if (auto preset = EncoderProfile::preset_dim(cfg.encoder.name)) {
            cfg.encoder.dim = preset;
        }
        cfg.encoder.seed = e.value("seed", cfg.encoder.seed);
    }

    if (j.contains("fusion")) {
        const auto& f = j.at("fusion");
        cfg.alpha = f.value("alpha", cfg.alpha);
        cfg.beta = f.value("beta", cfg.beta);
        cfg.gamma = f.value("gamma", cfg.gamma);
        cfg.max_vocab = f.value("max_vocab", cfg.max_vocab);
    }

    if (j.contains("rerank")) {
        const auto& r = j.at("rerank");
        cfg.rerank.mode = rerank_mode_from_string(r.value("mode", "none"));
        cfg.rerank.endpoint = r.value("endpoint", cfg.rerank.endpoint);
        cfg.rerank.model = r.value("model", cfg.rerank.model);
        cfg.rerank.candidate_cap = r.value("candidate_cap", cfg.rerank.candidate_cap);
        cfg.rerank.snippet_chars = r.value("snippet_chars", cfg.rerank.snippet_chars);
        cfg.rerank.timeout_ms = r.value("timeout_ms", cfg.rerank.timeout_ms);
        cfg.rerank.retries = r.value("retries", cfg.rerank.retries);
        if (r.contains("static_weights")) {
            auto w = r.at("static_weights").get<std::vector<double>>();
            if (w.size() != 3) fail(ErrorKind::Usage, "static_weights must have 3 entries");
            cfg.rerank.static_weights = ModalityWeights::normalized(w[0], w[1], w[2]);
        }
        if (r.contains("mock")) {
            const auto& m = r.at("mock");
            if (m.contains("weights")) {
                auto w = m.at("weights").get<std::vector<double>>();
                if (w.size() != 3) fail(ErrorKind::Usage, "mock weights must have 3 entries");
                cfg.rerank.mock.semantic = w[0];
                cfg.rerank.mock.lexical = w[1];
                cfg.rerank.mock.graph = w[2];
            }
            cfg.rerank.mock.listwise_key = m.value("listwise_key", cfg.rerank.mock.listwise_key);
            cfg.rerank.mock.malformed = m.value("malformed", false);
        }
    }

    if (j.contains("cutoffs")) cfg.cutoffs = j.at("cutoffs").get<std::vector<std::size_t>>();
    cfg.k = j.value("k", cfg.k);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.embed_batch = j.value("embed_batch", cfg.embed_batch);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.run_tag = j.value("run_tag", cfg.run_tag);

    if (j.contains("index_path")) {
        cfg.index_path = detail::resolve(base_dir, j.at("index_path").get<std::string>());
    }
    if (j.contains("output_dir")) {
        cfg.output_dir = detail::resolve(base_dir, j.at("output_dir").get<std::string>());
    }
    return cfg;
} catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Usage, std::string("invalid config: ") + e.what());
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::Usage, "cannot open config file: " + path.string());
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        fail(ErrorKind::Usage, "config is not a JSON object: " + path.string());
    }
    return parse_config(j, std::filesystem::absolute(path).parent_path());
}

enum class PipelineCommand { Index, Search, Eval };

// Structural checks plus existence of every path the command touches.
inline void validate_config(const PipelineConfig& cfg, PipelineCommand command) {
    if (cfg.encoder.dim < 2) fail(ErrorKind::Usage, "encoder dim must be >= 2");
    if (cfg.alpha < 0 || cfg.beta < 0 || cfg.gamma < 0 || cfg.alpha + cfg.beta + cfg.gamma <= 0) {
        fail(ErrorKind::Usage, "fusion scales must be non-negative with positive sum");
    }
    if (cfg.max_vocab == 0) fail(ErrorKind::Usage, "max_vocab must be >= 1");
    if (cfg.cutoffs.empty() || !std::is_sorted(cfg.cutoffs.begin(), cfg.cutoffs.end()) ||
        std::adjacent_find(cfg.cutoffs.begin(), cfg.cutoffs.end()) != cfg.cutoffs.end() ||
        cfg.cutoffs.front() == 0) {
        fail(ErrorKind::Usage, "cutoffs must be positive, strictly ascending");
    }
    if (cfg.k < cfg.cutoffs.back()) fail(ErrorKind::Usage, "k must be >= max(cutoffs)");
    if (cfg.rerank.candidate_cap == 0) fail(ErrorKind::Usage, "candidate_cap must be >= 1");
    if (cfg.workers == 0) fail(ErrorKind::Usage, "workers must be >= 1");
    if (cfg.index_path.empty()) fail(ErrorKind::Usage, "index_path is required");

    auto require_dir = [](const std::filesystem::path& p, const char* what) {
        if (p.empty()) fail(ErrorKind::Usage, std::string(what) + " is required");
        if (!std::filesystem::is_directory(p)) {
            fail(ErrorKind::Data, std::string(what) + " does not exist: " + p.string());
        }
    };
    auto require_file = [](const std::filesystem::path& p, const char* what) {
        if (!std::filesystem::is_regular_file(p)) {
            fail(ErrorKind::Data, std::string(what) + " does not exist: " + p.string());
        }
    };

    if (command == PipelineCommand::Index || command == PipelineCommand::Eval) {
        require_dir(cfg.dataset_dir, "dataset_dir");
        require_file(cfg.dataset_dir / "corpus.jsonl", "corpus.jsonl");
        if (cfg.entity_sidecar) require_file(*cfg.entity_sidecar, "entity_sidecar");
    }
    if (command == PipelineCommand::Eval) {
        require_file(cfg.dataset_dir / "queries.jsonl", "queries.jsonl");
        require_file(cfg.dataset_dir / cfg.qrels_file, "qrels file");
        if (cfg.output_dir.empty()) fail(ErrorKind::Usage, "output_dir is required for eval");
    }
    if (command == PipelineCommand::Search || command == PipelineCommand::Eval) {
        require_file(cfg.index_path, "index file");
    }
}

}  // namespace trimodal
