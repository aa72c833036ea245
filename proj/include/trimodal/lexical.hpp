#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "trimodal/digest.hpp"
#include "trimodal/error.hpp"
#include "trimodal/types.hpp"

namespace trimodal {

namespace detail {

// Word character for tokenization: ASCII alphanumerics plus any byte >= 0x80,
// so UTF-8 sequences stay inside one token, independent of locale.
inline bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline char fold_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace detail

// Lowercased maximal runs of word characters, in document order. ASCII
// letters are case-folded; bytes >= 0x80 pass through verbatim. No stopword
// removal, no stemming.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (detail::is_word_byte(static_cast<unsigned char>(ch))) {
            cur.push_back(detail::fold_ascii(ch));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// Corpus vocabulary with per-term document frequencies. Immutable after
// build; lookups are safe for concurrent callers.
struct Vocabulary {
    std::vector<std::string> terms;    // unique, sorted lexicographically
    std::vector<std::uint64_t> df;     // parallel to terms, 1 <= df <= n_docs
    std::uint64_t n_docs = 0;

    std::uint32_t dim() const { return static_cast<std::uint32_t>(terms.size()); }

    std::optional<std::uint32_t> find(std::string_view term) const {
        auto it = std::lower_bound(terms.begin(), terms.end(), term);
        if (it == terms.end() || *it != term) return std::nullopt;
        return static_cast<std::uint32_t>(it - terms.begin());
    }

    // Content fingerprint over terms, dfs and corpus size.
    std::uint64_t content_hash() const {
        std::uint64_t h = fnv1a64("vocab");
        h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&n_docs), sizeof n_docs), h);
        for (std::size_t i = 0; i < terms.size(); ++i) {
            h = fnv1a64(terms[i], h);
            h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&df[i]), sizeof df[i]), h);
        }
        return h;
    }
};

// Retains the max_terms terms with highest document frequency, ties broken
// lexicographically ascending. The retained set is stored sorted.
inline Vocabulary build_vocabulary(const std::vector<Document>& corpus, std::size_t max_terms) {
    if (corpus.empty()) fail(ErrorKind::Data, "empty corpus");

    std::map<std::string, std::uint64_t> df;
    for (const auto& doc : corpus) {
        std::unordered_set<std::string> seen;
        for (auto& tok : tokenize(doc.full_text())) seen.insert(std::move(tok));
        for (const auto& tok : seen) ++df[tok];
    }

    std::vector<std::pair<std::string, std::uint64_t>> ranked(df.begin(), df.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > max_terms) ranked.resize(max_terms);
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    Vocabulary vocab;
    vocab.n_docs = corpus.size();
    vocab.terms.reserve(ranked.size());
    vocab.df.reserve(ranked.size());
    for (auto& [term, count] : ranked) {
        vocab.terms.push_back(std::move(term));
        vocab.df.push_back(count);
    }
    return vocab;
}

// Smoothed idf, ln(N / (1 + df)), clamped at 0 so weights never go negative.
inline double term_idf(const Vocabulary& vocab, std::uint32_t term_index) {
    if (term_index >= vocab.dim()) fail(ErrorKind::Usage, "term index out of range");
    double idf = std::log(static_cast<double>(vocab.n_docs) /
                          (1.0 + static_cast<double>(vocab.df[term_index])));
    return std::max(0.0, idf);
}

// tf(t, text) * idf(t) per in-vocabulary term; tf is the raw occurrence
// count. Out-of-vocabulary terms are ignored and zero weights dropped.
inline SparseVector tfidf_vector(const Vocabulary& vocab, std::string_view text) {
    std::unordered_map<std::uint32_t, std::uint64_t> counts;
    for (const auto& tok : tokenize(text)) {
        if (auto idx = vocab.find(tok)) ++counts[*idx];
    }

    std::vector<std::pair<std::uint32_t, double>> entries;
    entries.reserve(counts.size());
    for (const auto& [idx, count] : counts) {
        double w = static_cast<double>(count) * term_idf(vocab, idx);
        if (w > 0.0) entries.emplace_back(idx, w);
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    SparseVector v;
    v.dim = vocab.dim();
    v.indices.reserve(entries.size());
    v.values.reserve(entries.size());
    for (const auto& [idx, w] : entries) {
        v.indices.push_back(idx);
        v.values.push_back(w);
    }
    return v;
}

}  // namespace trimodal
