#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "trimodal/digest.hpp"
#include "trimodal/error.hpp"
#include "trimodal/lexical.hpp"
#include "trimodal/types.hpp"

namespace trimodal {

// Divide-by-zero guard in the idf-weighted entity mean.
inline constexpr double kGraphEpsilon = 1e-6;

// Pluggable extraction hook; the default is the capitalized-run heuristic
// below, an external NER source can be substituted (see entity sidecar).
using EntityExtractor = std::function<std::vector<std::string>(std::string_view)>;

namespace detail {

struct WordToken {
    std::string core;     // leading/trailing punctuation stripped
    bool capitalized;     // first char of core is ASCII uppercase
    bool sentence_start;  // first token of the text or preceded by . ! ?
    bool ends_sentence;   // raw token carries terminal . ! ?
};

inline std::vector<WordToken> scan_word_tokens(std::string_view text) {
    std::vector<WordToken> out;
    std::size_t i = 0;
    bool next_starts_sentence = true;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t begin = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::string_view raw = text.substr(begin, i - begin);

        std::size_t lo = 0;
        std::size_t hi = raw.size();
        while (lo < hi && !is_word_byte(static_cast<unsigned char>(raw[lo]))) ++lo;
        while (hi > lo && !is_word_byte(static_cast<unsigned char>(raw[hi - 1]))) --hi;

        // Terminal punctuation check runs on the raw token, ignoring a
        // trailing quote or bracket.
        std::size_t last = raw.size();
        while (last > 0 && (raw[last - 1] == '"' || raw[last - 1] == '\'' ||
                            raw[last - 1] == ')' || raw[last - 1] == ']')) {
            --last;
        }
        bool ends = last > 0 && (raw[last - 1] == '.' || raw[last - 1] == '!' || raw[last - 1] == '?');

        WordToken tok;
        tok.core = std::string(raw.substr(lo, hi - lo));
        tok.capitalized = !tok.core.empty() && tok.core.front() >= 'A' && tok.core.front() <= 'Z';
        tok.sentence_start = next_starts_sentence;
        tok.ends_sentence = ends;
        next_starts_sentence = ends;
        if (!tok.core.empty()) out.push_back(std::move(tok));
    }
    return out;
}

}  // namespace detail

// Default heuristic: maximal runs of capitalized tokens, joined by single
// spaces. A run of length one whose token begins a sentence is discarded
// (sentence-initial capitalization is ambiguous). Duplicates are preserved in
// order (multiset semantics; repeated mentions contribute repeatedly to the
// graph embedding).
inline std::vector<std::string> extract_entities(std::string_view text) {
    std::vector<std::string> out;
    std::vector<const detail::WordToken*> run;
    auto tokens = detail::scan_word_tokens(text);

    auto flush = [&run, &out]() {
        if (run.empty()) return;
        if (run.size() > 1 || !run.front()->sentence_start) {
            std::string entity = run.front()->core;
            for (std::size_t i = 1; i < run.size(); ++i) {
                entity += ' ';
                entity += run[i]->core;
            }
            out.push_back(std::move(entity));
        }
        run.clear();
    };

    for (const auto& tok : tokens) {
        if (tok.sentence_start) flush();  // runs never cross sentence boundaries
        if (tok.capitalized) {
            run.push_back(&tok);
            if (tok.ends_sentence) flush();
        } else {
            flush();
        }
    }
    flush();
    return out;
}

// Document frequencies for extracted entities. df counts documents that
// mention the entity at least once; n_docs is the corpus size N.
struct EntityCatalog {
    std::vector<std::string> entities;  // unique, sorted lexicographically
    std::vector<std::uint64_t> df;
    std::uint64_t n_docs = 0;

    std::optional<std::uint32_t> find(std::string_view entity) const {
        auto it = std::lower_bound(entities.begin(), entities.end(), entity);
        if (it == entities.end() || *it != entity) return std::nullopt;
        return static_cast<std::uint32_t>(it - entities.begin());
    }

    bool contains(std::string_view entity) const { return find(entity).has_value(); }

    std::uint64_t content_hash() const {
        std::uint64_t h = fnv1a64("catalog");
        h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&n_docs), sizeof n_docs), h);
        for (std::size_t i = 0; i < entities.size(); ++i) {
            h = fnv1a64(entities[i], h);
            h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&df[i]), sizeof df[i]), h);
        }
        return h;
    }
};

// Builds the catalog from precomputed per-document entity lists (one list
// per corpus document, e.g. from the heuristic or a sidecar file).
inline EntityCatalog build_entity_catalog(const std::vector<std::vector<std::string>>& per_doc_entities,
                                          std::uint64_t n_docs) {
    if (n_docs == 0) fail(ErrorKind::Data, "empty corpus");
    std::map<std::string, std::uint64_t> df;
    for (const auto& doc_entities : per_doc_entities) {
        std::unordered_set<std::string_view> seen;
        for (const auto& e : doc_entities) {
            if (seen.insert(e).second) ++df[e];
        }
    }
    EntityCatalog catalog;
    catalog.n_docs = n_docs;
    catalog.entities.reserve(df.size());
    catalog.df.reserve(df.size());
    for (const auto& [entity, count] : df) {
        catalog.entities.push_back(entity);
        catalog.df.push_back(count);
    }
    return catalog;
}

inline EntityCatalog build_entity_catalog(const std::vector<Document>& corpus,
                                          const EntityExtractor& extract = {}) {
    if (corpus.empty()) fail(ErrorKind::Data, "empty corpus");
    std::vector<std::vector<std::string>> lists;
    lists.reserve(corpus.size());
    for (const auto& doc : corpus) {
        lists.push_back(extract ? extract(doc.full_text()) : extract_entities(doc.full_text()));
    }
    return build_entity_catalog(lists, corpus.size());
}

// ln(N / (1 + df(e))), clamped at 0. Unknown entities weigh 0 (non-fatal).
inline double entity_idf(const EntityCatalog& catalog, std::string_view entity) {
    auto idx = catalog.find(entity);
    if (!idx) return 0.0;
    double idf = std::log(static_cast<double>(catalog.n_docs) /
                          (1.0 + static_cast<double>(catalog.df[*idx])));
    return std::max(0.0, idf);
}

// Idf-weighted mean of entity embeddings:
//   g = sum_e idf(e) * encode(e) / (sum_e idf(e) + epsilon)
// The sum runs over the extracted multiset, so duplicate mentions contribute
// once per occurrence. No entities, or all idfs zero, yields the zero vector.
inline GraphEmbedding graph_embedding(const EntityCatalog& catalog,
                                      const std::vector<std::string>& entities,
                                      const std::function<DenseVector(const std::string&)>& encode,
                                      std::size_t dim) {
    GraphEmbedding g(dim, 0.0);
    double weight_sum = 0.0;
    for (const auto& entity : entities) {
        double w = entity_idf(catalog, entity);
        if (w <= 0.0) continue;
        DenseVector v = encode(entity);
        if (v.size() != dim) {
            fail(ErrorKind::Data, "entity embedding dimension mismatch for \"" + entity + "\"");
        }
        for (std::size_t i = 0; i < dim; ++i) g[i] += w * v[i];
        weight_sum += w;
    }
    if (weight_sum <= 0.0) return GraphEmbedding(dim, 0.0);
    double denom = weight_sum + kGraphEpsilon;
    for (double& x : g) x /= denom;
    return g;
}

}  // namespace trimodal
