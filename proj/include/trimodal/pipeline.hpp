#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "trimodal/beir.hpp"
#include "trimodal/config.hpp"
#include "trimodal/encoder.hpp"
#include "trimodal/error.hpp"
#include "trimodal/http_clients.hpp"
#include "trimodal/index.hpp"
#include "trimodal/index_io.hpp"
#include "trimodal/metrics.hpp"
#include "trimodal/rerank.hpp"
#include "trimodal/run_io.hpp"

namespace trimodal::pipeline {

inline std::shared_ptr<EmbeddingProvider> make_embedding_provider(const PipelineConfig& cfg) {
    if (cfg.encoder.endpoint == "builtin:test") {
        return std::make_shared<HashEncoder>(cfg.encoder);
    }
    HttpOptions options;
    options.timeout_ms = cfg.rerank.timeout_ms;
    return std::make_shared<HttpEmbeddingProvider>(cfg.encoder, options);
}

inline std::unique_ptr<LlmClient> make_llm_client(const PipelineConfig& cfg) {
    if (cfg.rerank.endpoint == "builtin:mock") {
        return std::make_unique<MockLlmClient>(cfg.rerank.mock);
    }
    HttpOptions options;
    options.timeout_ms = cfg.rerank.timeout_ms;
    options.retries = cfg.rerank.retries;
    return std::make_unique<HttpLlmClient>(cfg.rerank.endpoint, cfg.rerank.model, options,
                                           cfg.rerank.snippet_chars);
}

// Embedder for a fresh build: vocabulary and catalog derived from the corpus.
inline TriModalEmbedder make_embedder(const PipelineConfig& cfg, const std::vector<Document>& corpus) {
    std::unordered_map<std::string, std::vector<std::string>> sidecar;
    if (cfg.entity_sidecar) sidecar = load_entity_sidecar(*cfg.entity_sidecar);

    Vocabulary vocab = build_vocabulary(corpus, cfg.max_vocab);

    std::vector<std::vector<std::string>> per_doc;
    per_doc.reserve(corpus.size());
    for (const auto& doc : corpus) {
        auto it = sidecar.find(doc.id);
        per_doc.push_back(it != sidecar.end() ? it->second : extract_entities(doc.full_text()));
    }
    EntityCatalog catalog = build_entity_catalog(per_doc, corpus.size());

    FusionConfig fusion;
    fusion.alpha = cfg.alpha;
    fusion.beta = cfg.beta;
    fusion.gamma = cfg.gamma;
    return TriModalEmbedder(make_embedding_provider(cfg), std::move(vocab), std::move(catalog),
                            fusion, std::move(sidecar));
}

// Embedder for querying an existing index: vocabulary and catalog come from
// the index so query-time state provably matches build-time state. The
// resulting fingerprint must equal the stored one.
inline TriModalEmbedder make_query_embedder(const PipelineConfig& cfg, const HybridIndex& index) {
    FusionConfig fusion;
    fusion.alpha = cfg.alpha;
    fusion.beta = cfg.beta;
    fusion.gamma = cfg.gamma;
    TriModalEmbedder embedder(make_embedding_provider(cfg), index.vocab, index.catalog, fusion);
    if (embedder.fingerprint() != index.fingerprint) {
        fail(ErrorKind::Mismatch, "index/query encoder mismatch: config produces \"" +
                                      embedder.fingerprint() + "\" but index was built with \"" +
                                      index.fingerprint + "\"");
    }
    return embedder;
}

struct BuildReport {
    std::size_t doc_count = 0;
    std::size_t vocab_size = 0;
    std::size_t entity_count = 0;
    std::string config_hash;
    std::string fingerprint;
    std::map<std::string, double> timings_ms;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["doc_count"] = doc_count;
        j["vocab_size"] = vocab_size;
        j["entity_count"] = entity_count;
        j["config_hash"] = config_hash;
        j["fingerprint"] = fingerprint;
        for (const auto& [stage, ms] : timings_ms) j["timings_ms"][stage] = ms;
        return j;
    }
};

// Offline indexing: embed + fuse every document, write the index file and a
// JSON build report next to it (<index_path>.build.json).
inline BuildReport cmd_index(const PipelineConfig& cfg, std::ostream* warn = nullptr) {
    validate_config(cfg, PipelineCommand::Index);
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point start) {
        return std::chrono::duration<double, std::milli>(clock::now() - start).count();
    };

    BuildReport report;
    report.config_hash = cfg.config_hash();

    auto t0 = clock::now();
    std::vector<Document> corpus = load_beir_corpus(cfg.dataset_dir / "corpus.jsonl");
    if (corpus.empty()) fail(ErrorKind::Data, "empty corpus");
    report.timings_ms["load"] = ms_since(t0);

    t0 = clock::now();
    TriModalEmbedder embedder = make_embedder(cfg, corpus);
    report.timings_ms["vocabulary_catalog"] = ms_since(t0);

    t0 = clock::now();
    HybridIndex index = build_index(corpus, embedder, cfg.embed_batch);
    report.timings_ms["embed_fuse"] = ms_since(t0);

    t0 = clock::now();
    if (cfg.index_path.has_parent_path()) {
        std::filesystem::create_directories(cfg.index_path.parent_path());
    }
    save_index(index, cfg.index_path);
    report.timings_ms["save"] = ms_since(t0);

    report.doc_count = index.size();
    report.vocab_size = index.vocab.dim();
    report.entity_count = index.catalog.entities.size();
    report.fingerprint = index.fingerprint;

    std::filesystem::path report_path = cfg.index_path;
    report_path += ".build.json";
    write_json_file(report.to_json(), report_path);

    if (warn && index.vocab.dim() == cfg.max_vocab) {
        *warn << "note: vocabulary capped at " << cfg.max_vocab << " terms\n";
    }
    return report;
}

namespace detail {

struct CorpusLookup {
    std::unordered_map<std::string, const Document*> by_id;

    explicit CorpusLookup(const std::vector<Document>& corpus) {
        by_id.reserve(corpus.size());
        for (const auto& doc : corpus) by_id[doc.id] = &doc;
    }

    const Document* find(const std::string& id) const {
        auto it = by_id.find(id);
        return it == by_id.end() ? nullptr : it->second;
    }
};

inline std::vector<RerankCandidate> make_candidates(const HybridIndex& index,
                                                    const TriModalEmbedding& query_tri,
                                                    const std::vector<SearchHit>& hits,
                                                    const CorpusLookup* corpus, std::size_t cap) {
    std::vector<RerankCandidate> candidates;
    std::size_t n = std::min(cap, hits.size());
    candidates.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RerankCandidate c;
        c.doc_id = hits[i].doc_id;
        c.pre_score = hits[i].score;
        if (corpus) {
            if (const Document* doc = corpus->find(hits[i].doc_id)) {
                c.title = doc->title;
                c.snippet = doc->text;
            }
        }
        ModalityCosines cos = per_modality_scores(index, query_tri, hits[i].doc_id);
        c.cos_semantic = cos.semantic;
        c.cos_lexical = cos.lexical;
        c.cos_graph = cos.graph;
        candidates.push_back(std::move(c));
    }
    return candidates;
}

}  // namespace detail

struct SearchLine {
    std::size_t rank = 0;
    std::string doc_id;
    double score = 0.0;
    std::string title;
};

struct SearchOutput {
    std::vector<SearchLine> lines;
    std::optional<ModalityWeights> weights;  // weights mode only
    bool fallback = false;
};

// Online query loop for one query: embed tri-modally, exact top-k retrieval,
// optional LLM rerank.
inline SearchOutput cmd_search(const PipelineConfig& cfg, const std::string& query_text,
                               std::size_t k, std::ostream* warn = nullptr) {
    validate_config(cfg, PipelineCommand::Search);
    if (k == 0) fail(ErrorKind::Usage, "k must be >= 1");

    HybridIndex index = load_index(cfg.index_path);
    TriModalEmbedder embedder = make_query_embedder(cfg, index);

    std::optional<detail::CorpusLookup> corpus;
    std::vector<Document> docs;
    if (!cfg.dataset_dir.empty() && std::filesystem::is_regular_file(cfg.dataset_dir / "corpus.jsonl")) {
        docs = load_beir_corpus(cfg.dataset_dir / "corpus.jsonl");
        corpus.emplace(docs);
    }

    TriModalEmbedding tri = embedder.embed_query(query_text);
    HybridVector q = fuse(tri, embedder.fusion());
    q.fingerprint = embedder.fingerprint();
    std::vector<SearchHit> hits = search(index, q, k);

    SearchOutput out;
    if (cfg.rerank.mode == RerankMode::None || hits.empty()) {
        for (std::size_t i = 0; i < hits.size(); ++i) {
            const Document* doc = corpus ? corpus->find(hits[i].doc_id) : nullptr;
            out.lines.push_back({i + 1, hits[i].doc_id, hits[i].score, doc ? doc->title : ""});
        }
        return out;
    }

    auto candidates = detail::make_candidates(index, tri, hits, corpus ? &*corpus : nullptr,
                                              cfg.rerank.candidate_cap);
    RerankRequest request{query_text, candidates, cfg.rerank.mode};
    auto llm = make_llm_client(cfg);
    RerankOutcome outcome = rerank(request, *llm, cfg.rerank.static_weights, warn);

    out.weights = outcome.weights;
    out.fallback = outcome.fallback;
    std::size_t rank = 1;
    for (const auto& c : outcome.ranked) {
        double score = cfg.rerank.mode == RerankMode::Weights && outcome.weights
                           ? outcome.weights->semantic * c.cos_semantic +
                                 outcome.weights->lexical * c.cos_lexical +
                                 outcome.weights->graph * c.cos_graph
                           : c.pre_score;
        out.lines.push_back({rank++, c.doc_id, score, c.title});
    }
    for (std::size_t i = candidates.size(); i < hits.size(); ++i) {
        const Document* doc = corpus ? corpus->find(hits[i].doc_id) : nullptr;
        out.lines.push_back({rank++, hits[i].doc_id, hits[i].score, doc ? doc->title : ""});
    }
    return out;
}

struct EvalResult {
    RunResult run;                        // final ordering (post-rerank when enabled)
    std::optional<RunResult> pre_run;     // first-stage ordering, rerank modes only
    MetricReport report;
    std::optional<MetricReport> pre_report;
    std::uint64_t fallback_count = 0;
    nlohmann::json report_json;
    std::string report_text;
};

namespace detail {

struct QuerySlot {
    std::string query_id;
    std::vector<SearchHit> pre_hits;
    std::vector<SearchHit> post_hits;
    bool fallback = false;
    std::string warnings;
};

// Comparison block in the shape of the pre/post tables: one row per stage,
// the headline metrics at the largest cutoff as columns.
inline std::string comparison_table(const MetricReport& pre, const MetricReport& post,
                                    std::size_t cutoff) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    std::string k = std::to_string(cutoff);
    os << "-- pre/post rerank comparison --\n";
    os << std::left << std::setw(14) << "stage" << std::right << std::setw(11) << ("Recall@" + k)
       << std::setw(11) << ("MRR@" + k) << std::setw(11) << ("nDCG@" + k) << "\n";
    auto row = [&](const char* name, const MetricReport& r) {
        os << std::left << std::setw(14) << name << std::right << std::setw(11)
           << r.aggregates.at("recall").at(cutoff) << std::setw(11)
           << r.aggregates.at("mrr").at(cutoff) << std::setw(11)
           << r.aggregates.at("ndcg").at(cutoff) << "\n";
    };
    row("pre-rerank", pre);
    row("post-rerank", post);
    return os.str();
}

}  // namespace detail

// Batch evaluation: retrieve (and optionally rerank) every query, write the
// TREC run file, metadata sidecar, and the metric report in JSON and text
// form. With rerank enabled the pre-rerank report is produced alongside, so
// the pre/post comparison is one command.
inline EvalResult cmd_eval(const PipelineConfig& cfg, std::ostream* warn = nullptr) {
    validate_config(cfg, PipelineCommand::Eval);

    HybridIndex index = load_index(cfg.index_path);
    TriModalEmbedder embedder = make_query_embedder(cfg, index);

    std::ostringstream load_warnings;
    BeirDataset dataset = load_beir(cfg.dataset_dir, cfg.qrels_file, &load_warnings);
    detail::CorpusLookup corpus(dataset.corpus);
    if (dataset.queries.empty()) fail(ErrorKind::Data, "zero evaluable queries: queries.jsonl is empty");

    const bool reranking = cfg.rerank.mode != RerankMode::None;
    std::unique_ptr<LlmClient> llm = reranking ? make_llm_client(cfg) : nullptr;

    std::vector<detail::QuerySlot> slots(dataset.queries.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= dataset.queries.size()) break;
            const Query& query = dataset.queries[i];
            detail::QuerySlot& slot = slots[i];
            slot.query_id = query.id;

            TriModalEmbedding tri = embedder.embed_query(query.text);
            HybridVector q = fuse(tri, embedder.fusion());
            q.fingerprint = embedder.fingerprint();
            slot.pre_hits = search(index, q, cfg.k);

            if (!reranking || slot.pre_hits.empty()) {
                slot.post_hits = slot.pre_hits;
                continue;
            }
            auto candidates = detail::make_candidates(index, tri, slot.pre_hits, &corpus,
                                                      cfg.rerank.candidate_cap);
            RerankRequest request{query.text, candidates, cfg.rerank.mode};
            std::ostringstream local_warn;
            RerankOutcome outcome = rerank(request, *llm, cfg.rerank.static_weights, &local_warn);
            slot.fallback = outcome.fallback;
            slot.warnings = local_warn.str();

            slot.post_hits.reserve(slot.pre_hits.size());
            for (const auto& c : outcome.ranked) slot.post_hits.push_back({c.doc_id, 0.0});
            for (std::size_t j = candidates.size(); j < slot.pre_hits.size(); ++j) {
                slot.post_hits.push_back(slot.pre_hits[j]);
            }
            // Rank-based scores keep the run file monotone; listwise output
            // carries no real-valued relevance.
            for (std::size_t j = 0; j < slot.post_hits.size(); ++j) {
                slot.post_hits[j].score = 1.0 / static_cast<double>(j + 1);
            }
        }
    };

    std::size_t n_workers = std::min(cfg.workers, dataset.queries.size());
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    EvalResult result;
    if (warn) *warn << load_warnings.str();
    for (const auto& slot : slots) {
        if (slot.fallback) ++result.fallback_count;
        if (warn && !slot.warnings.empty()) *warn << slot.warnings;
    }

    RunMetadata meta;
    meta.config_hash = cfg.config_hash();
    meta.index_fingerprint = index.fingerprint;
    meta.rerank_mode = to_string(cfg.rerank.mode);
    meta.fallback_count = result.fallback_count;
    meta.run_tag = cfg.run_tag;

    result.run.meta = meta;
    for (auto& slot : slots) result.run.per_query.emplace_back(slot.query_id, std::move(slot.post_hits));
    if (reranking) {
        result.pre_run.emplace();
        result.pre_run->meta = meta;
        result.pre_run->meta.run_tag = cfg.run_tag + "-pre";
        for (auto& slot : slots) {
            result.pre_run->per_query.emplace_back(slot.query_id, std::move(slot.pre_hits));
        }
    }

    std::ostringstream score_warnings;
    result.report = evaluate_run(result.run, dataset.qrels, cfg.cutoffs, &score_warnings);
    if (result.pre_run) {
        result.pre_report = evaluate_run(*result.pre_run, dataset.qrels, cfg.cutoffs, nullptr);
    }
    if (warn) *warn << score_warnings.str();

    // Assemble report documents.
    nlohmann::json rj;
    rj["config_hash"] = meta.config_hash;
    rj["index_fingerprint"] = meta.index_fingerprint;
    rj["rerank_mode"] = meta.rerank_mode;
    rj["fallback_count"] = meta.fallback_count;
    rj["report"] = result.report.to_json();
    if (result.pre_report) rj["pre_rerank"] = result.pre_report->to_json(false);
    result.report_json = rj;

    std::ostringstream text;
    text << "== tri-modal retrieval report ==\n"
         << "rerank mode: " << meta.rerank_mode << "\n\n";
    text << result.report.to_table(reranking ? "-- ranking quality (post-rerank) --"
                                             : "-- ranking quality --");
    if (result.pre_report) {
        text << "\n" << result.pre_report->to_table("-- ranking quality (pre-rerank) --");
        text << "\n" << detail::comparison_table(*result.pre_report, result.report, cfg.cutoffs.back());
    }
    result.report_text = text.str();

    std::filesystem::create_directories(cfg.output_dir);
    write_trec_run(result.run, cfg.output_dir / "run.tsv");
    if (result.pre_run) write_trec_run(*result.pre_run, cfg.output_dir / "run_pre.tsv");
    write_json_file(run_metadata_json(meta, result.run.per_query.size()),
                    cfg.output_dir / "run_meta.json");
    write_json_file(result.report_json, cfg.output_dir / "report.json");
    write_text_file(result.report_text, cfg.output_dir / "report.txt");
    return result;
}

}  // namespace trimodal::pipeline
