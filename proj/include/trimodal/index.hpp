#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "trimodal/encoder.hpp"
#include "trimodal/entities.hpp"
#include "trimodal/error.hpp"
#include "trimodal/fusion.hpp"
#include "trimodal/lexical.hpp"
#include "trimodal/types.hpp"

namespace trimodal {

struct SearchHit {
    std::string doc_id;
    double score = 0.0;
};

struct ModalityCosines {
    double semantic = 0.0;
    double lexical = 0.0;
    double graph = 0.0;
};

// Produces tri-modal embeddings for documents and queries against one fixed
// (encoder, vocabulary, catalog, fusion) configuration. Entity embeddings
// are cached; the cache is the only mutable state and is mutex-guarded, so
// one embedder may serve concurrent callers.
class TriModalEmbedder {
public:
    TriModalEmbedder(std::shared_ptr<EmbeddingProvider> provider, Vocabulary vocab,
                     EntityCatalog catalog, FusionConfig fusion,
                     std::unordered_map<std::string, std::vector<std::string>> entity_sidecar = {})
        : provider_(std::move(provider)),
          vocab_(std::move(vocab)),
          catalog_(std::move(catalog)),
          fusion_(std::move(fusion)),
          sidecar_(std::move(entity_sidecar)) {
        fusion_.dims.semantic = provider_->dim();
        fusion_.dims.vocab = vocab_.dim();
        fusion_.validate();
    }

    const Vocabulary& vocab() const { return vocab_; }
    const EntityCatalog& catalog() const { return catalog_; }
    const FusionConfig& fusion() const { return fusion_; }
    EmbeddingProvider& provider() const { return *provider_; }

    // Covers everything that must match between index build and query time.
    std::string fingerprint() const {
        return provider_->fingerprint() + "|vocab=" + std::to_string(vocab_.content_hash()) +
               "|cat=" + std::to_string(catalog_.content_hash()) + "|fuse=" +
               format_double(fusion_.alpha) + "," + format_double(fusion_.beta) + "," +
               format_double(fusion_.gamma) + "|dims=" + std::to_string(fusion_.dims.semantic) +
               "," + std::to_string(fusion_.dims.vocab);
    }

    std::vector<std::string> entities_for(const Document& doc) const {
        auto it = sidecar_.find(doc.id);
        if (it != sidecar_.end()) return it->second;
        return extract_entities(doc.full_text());
    }

    TriModalEmbedding embed_document(const Document& doc) const {
        return embed_text(doc.full_text(), entities_for(doc));
    }

    // Semantic block precomputed elsewhere (batched embedding during builds).
    TriModalEmbedding embed_document(const Document& doc, DenseVector semantic) const {
        TriModalEmbedding tri;
        tri.semantic = std::move(semantic);
        tri.lexical = tfidf_vector(vocab_, doc.full_text());
        tri.graph = graph_embedding(catalog_, entities_for(doc), entity_encoder(), provider_->dim());
        return tri;
    }

    TriModalEmbedding embed_query(const std::string& text) const {
        return embed_text(text, extract_entities(text));
    }

    HybridVector query_vector(const std::string& text) const {
        HybridVector h = fuse(embed_query(text), fusion_);
        h.fingerprint = fingerprint();
        return h;
    }

private:
    static std::string format_double(double v) {
        char buf[32];
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, p);
    }

    std::function<DenseVector(const std::string&)> entity_encoder() const {
        return [this](const std::string& entity) {
            {
                std::lock_guard<std::mutex> lock(cache_->mutex);
                auto it = cache_->vectors.find(entity);
                if (it != cache_->vectors.end()) return it->second;
            }
            DenseVector v = provider_->embed({entity}).at(0);
            std::lock_guard<std::mutex> lock(cache_->mutex);
            return cache_->vectors.emplace(entity, std::move(v)).first->second;
        };
    }

    TriModalEmbedding embed_text(const std::string& text, const std::vector<std::string>& entities) const {
        TriModalEmbedding tri;
        tri.semantic = provider_->embed({text}).at(0);
        tri.lexical = tfidf_vector(vocab_, text);
        tri.graph = graph_embedding(catalog_, entities, entity_encoder(), provider_->dim());
        return tri;
    }

    struct EntityCache {
        std::mutex mutex;
        std::unordered_map<std::string, DenseVector> vectors;
    };

    std::shared_ptr<EmbeddingProvider> provider_;
    Vocabulary vocab_;
    EntityCatalog catalog_;
    FusionConfig fusion_;
    std::unordered_map<std::string, std::vector<std::string>> sidecar_;
    std::shared_ptr<EntityCache> cache_ = std::make_shared<EntityCache>();
};

// Flat store of fused document vectors plus everything needed to embed
// queries identically. Immutable after build; search and rescoring are
// read-only.
struct HybridIndex {
    std::vector<std::string> doc_ids;
    std::vector<std::vector<double>> rows;  // unit-norm unless flagged zero
    std::vector<bool> zero_flags;
    FusionConfig config;
    Vocabulary vocab;
    EntityCatalog catalog;
    std::string encoder_fingerprint;  // provider part only
    std::string fingerprint;          // full embedder fingerprint

    std::size_t size() const { return doc_ids.size(); }

    std::optional<std::size_t> find_doc(std::string_view doc_id) const {
        auto it = row_of_.find(std::string(doc_id));
        if (it == row_of_.end()) return std::nullopt;
        return it->second;
    }

    void rebuild_lookup() {
        row_of_.clear();
        row_of_.reserve(doc_ids.size());
        for (std::size_t i = 0; i < doc_ids.size(); ++i) row_of_[doc_ids[i]] = i;
    }

private:
    std::unordered_map<std::string, std::size_t> row_of_;
};

// Offline indexing loop: embed every document tri-modally, fuse, append.
// Semantic embeddings are batched through the provider. Deterministic given
// a deterministic provider.
inline HybridIndex build_index(const std::vector<Document>& corpus, const TriModalEmbedder& embedder,
                               std::size_t embed_batch = 32) {
    if (corpus.empty()) fail(ErrorKind::Data, "empty corpus");

    std::unordered_set<std::string_view> ids;
    for (const auto& doc : corpus) {
        if (!ids.insert(doc.id).second) {
            fail(ErrorKind::Data, "duplicate doc_id in corpus: " + doc.id);
        }
    }

    HybridIndex index;
    index.config = embedder.fusion();
    index.vocab = embedder.vocab();
    index.catalog = embedder.catalog();
    index.encoder_fingerprint = embedder.provider().fingerprint();
    index.fingerprint = embedder.fingerprint();
    index.doc_ids.reserve(corpus.size());
    index.rows.reserve(corpus.size());
    index.zero_flags.reserve(corpus.size());

    for (std::size_t begin = 0; begin < corpus.size(); begin += embed_batch) {
        std::size_t end = std::min(corpus.size(), begin + embed_batch);
        std::vector<std::string> texts;
        texts.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) texts.push_back(corpus[i].full_text());

        std::vector<DenseVector> semantic;
        try {
            semantic = embedder.provider().embed(texts);
        } catch (const Error& e) {
            fail(e.kind(), "semantic embedding failed at doc_id " + corpus[begin].id + ": " + e.what());
        }
        if (semantic.size() != texts.size()) {
            fail(ErrorKind::External, "provider returned wrong batch size");
        }

        for (std::size_t i = begin; i < end; ++i) {
            TriModalEmbedding tri;
            try {
                tri = embedder.embed_document(corpus[i], std::move(semantic[i - begin]));
            } catch (const Error& e) {
                fail(e.kind(), std::string(e.what()) + " (doc_id " + corpus[i].id + ")");
            }
            HybridVector h = fuse(tri, embedder.fusion());
            index.doc_ids.push_back(corpus[i].id);
            index.rows.push_back(std::move(h.values));
            index.zero_flags.push_back(h.is_zero);
        }
    }
    index.rebuild_lookup();
    return index;
}

// Exact top-k by dot product over unit-norm rows (dot == cosine). Descending
// score, ties broken by doc_id ascending. Returns min(k, corpus size) hits.
inline std::vector<SearchHit> search(const HybridIndex& index, const HybridVector& q, std::size_t k) {
    if (k == 0) fail(ErrorKind::Usage, "k must be >= 1");
    if (q.fingerprint != index.fingerprint) {
        fail(ErrorKind::Mismatch, "index/query encoder mismatch");
    }
    if (q.values.size() != index.config.dims.total()) {
        fail(ErrorKind::Mismatch, "query vector dimension does not match index");
    }

    std::vector<std::size_t> order(index.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> scores(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) scores[i] = dot(q.values, index.rows[i]);

    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.doc_ids[a] < index.doc_ids[b];
    };
    std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + take, order.end(), better);

    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        hits.push_back({index.doc_ids[order[i]], scores[order[i]]});
    }
    return hits;
}

// Cosine per modality block between the query's normalized blocks and a
// stored document row. Stored blocks are positive multiples of the
// normalized modality vectors, so cosine is computed directly on them; a
// zero block on either side yields 0 by convention.
inline ModalityCosines per_modality_scores(const HybridIndex& index, const TriModalEmbedding& query,
                                           const std::string& doc_id) {
    auto row = index.find_doc(doc_id);
    if (!row) fail(ErrorKind::Data, "unknown doc_id: " + doc_id);

    const auto& dims = index.config.dims;
    std::span<const double> doc(index.rows[*row]);

    ModalityCosines out;
    out.semantic = cosine(query.semantic, semantic_block(doc, dims));

    DenseVector q_lex(dims.vocab, 0.0);
    for (std::size_t i = 0; i < query.lexical.nnz(); ++i) {
        q_lex[query.lexical.indices[i]] = query.lexical.values[i];
    }
    out.lexical = cosine(q_lex, lexical_block(doc, dims));
    out.graph = cosine(query.graph, graph_block(doc, dims));
    return out;
}

}  // namespace trimodal
