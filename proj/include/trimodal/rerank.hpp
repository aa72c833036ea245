#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trimodal/error.hpp"

namespace trimodal {

enum class RerankMode { None, Weights, Listwise };

inline std::string to_string(RerankMode mode) {
    switch (mode) {
        case RerankMode::None: return "none";
        case RerankMode::Weights: return "weights";
        case RerankMode::Listwise: return "listwise";
    }
    return "none";
}

inline RerankMode rerank_mode_from_string(const std::string& s) {
    if (s == "none") return RerankMode::None;
    if (s == "weights") return RerankMode::Weights;
    if (s == "listwise") return RerankMode::Listwise;
    fail(ErrorKind::Usage, "unknown rerank mode: " + s);
}

// Per-query modality weights, each in [0,1], summing to 1.
struct ModalityWeights {
    double semantic = 1.0 / 3.0;
    double lexical = 1.0 / 3.0;
    double graph = 1.0 / 3.0;

    void validate() const {
        auto in_range = [](double w) { return w >= 0.0 && w <= 1.0; };
        if (!in_range(semantic) || !in_range(lexical) || !in_range(graph) ||
            std::abs(semantic + lexical + graph - 1.0) > 1e-9) {
            fail(ErrorKind::Usage, "modality weights must lie in [0,1] and sum to 1");
        }
    }

    static ModalityWeights normalized(double s, double t, double g) {
        auto clamp01 = [](double w) { return std::min(1.0, std::max(0.0, w)); };
        s = clamp01(s);
        t = clamp01(t);
        g = clamp01(g);
        double sum = s + t + g;
        if (sum <= 0.0) fail(ErrorKind::Data, "unparseable weights: all zero");
        return {s / sum, t / sum, g / sum};
    }
};

struct RerankCandidate {
    std::string doc_id;
    std::string title;
    std::string snippet;
    double cos_semantic = 0.0;
    double cos_lexical = 0.0;
    double cos_graph = 0.0;
    double pre_score = 0.0;  // hybrid cosine from first-stage retrieval
};

struct RerankRequest {
    std::string query;
    std::vector<RerankCandidate> candidates;
    RerankMode mode = RerankMode::Weights;
};

// Raw-text completion source for rerank prompts. Implementations must be
// safe for concurrent calls on distinct requests.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const RerankRequest& request) = 0;
};

namespace detail {

inline std::string truncate_snippet(const std::string& text, std::size_t max_chars) {
    if (text.size() <= max_chars) return text;
    return text.substr(0, max_chars) + "...";
}

inline std::string format_cosine(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << v;
    return os.str();
}

// First balanced {...} or [...] region of raw, parsed as JSON.
inline std::optional<nlohmann::json> first_json_region(const std::string& raw, char open, char close) {
    std::size_t start = raw.find(open);
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == open) ++depth;
            else if (c == close && --depth == 0) {
                auto j = nlohmann::json::parse(raw.substr(start, i - start + 1), nullptr, false);
                if (!j.is_discarded()) return j;
                break;
            }
        }
        start = raw.find(open, start + 1);
    }
    return std::nullopt;
}

}  // namespace detail

// Deterministic prompt asking for strict-JSON modality weights. Candidates
// appear once each with their per-modality cosines and a truncated snippet.
inline std::string build_weight_prompt(const std::string& query,
                                       const std::vector<RerankCandidate>& candidates,
                                       std::size_t snippet_chars = 300) {
    if (candidates.empty()) fail(ErrorKind::Usage, "no candidates to rerank");
    std::ostringstream os;
    os << "You weight retrieval signals for a search system with three modalities:\n"
          "semantic (dense meaning), lexical (exact term overlap), graph (entity overlap).\n"
          "Given the query and the retrieved candidates below, decide how much each\n"
          "modality should count for this query.\n\n";
    os << "Query: " << query << "\n\nCandidates:\n";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        os << (i + 1) << ". id=" << c.doc_id << " cos_semantic=" << detail::format_cosine(c.cos_semantic)
           << " cos_lexical=" << detail::format_cosine(c.cos_lexical)
           << " cos_graph=" << detail::format_cosine(c.cos_graph);
        if (!c.title.empty()) os << " title=\"" << c.title << "\"";
        os << "\n   snippet: " << detail::truncate_snippet(c.snippet, snippet_chars) << "\n";
    }
    os << "\nReply with strict JSON and nothing else: "
          "{\"semantic\": s, \"lexical\": l, \"graph\": g} with non-negative numbers summing to 1.\n";
    return os.str();
}

// Deterministic prompt asking for a listwise ordering as a JSON array.
inline std::string build_listwise_prompt(const std::string& query,
                                         const std::vector<RerankCandidate>& candidates,
                                         std::size_t snippet_chars = 300) {
    if (candidates.empty()) fail(ErrorKind::Usage, "no candidates to rerank");
    std::ostringstream os;
    os << "You rerank search results. Order the candidate documents below from most\n"
          "to least relevant to the query.\n\n";
    os << "Query: " << query << "\n\nCandidates:\n";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        os << (i + 1) << ". id=" << c.doc_id;
        if (!c.title.empty()) os << " title=\"" << c.title << "\"";
        os << "\n   snippet: " << detail::truncate_snippet(c.snippet, snippet_chars) << "\n";
    }
    os << "\nReply with strict JSON and nothing else: an array of candidate ids, most "
          "relevant first, e.g. [\"id1\", \"id2\"].\n";
    return os.str();
}

// Extracts the first JSON object from raw, clamps each weight to [0,1] and
// renormalizes to sum 1. All-zero, missing or non-numeric fields reject.
inline ModalityWeights parse_weight_response(const std::string& raw) {
    auto j = detail::first_json_region(raw, '{', '}');
    if (!j) fail(ErrorKind::Data, "unparseable weights: no JSON object found");
    if (!j->contains("semantic") || !j->contains("lexical") || !j->contains("graph") ||
        !(*j)["semantic"].is_number() || !(*j)["lexical"].is_number() || !(*j)["graph"].is_number()) {
        fail(ErrorKind::Data, "unparseable weights: expected numeric semantic/lexical/graph");
    }
    return ModalityWeights::normalized((*j)["semantic"].get<double>(), (*j)["lexical"].get<double>(),
                                       (*j)["graph"].get<double>());
}

// Extracts the first JSON array of strings from raw.
inline std::vector<std::string> parse_listwise_response(const std::string& raw) {
    auto j = detail::first_json_region(raw, '[', ']');
    if (!j || !j->is_array()) fail(ErrorKind::Data, "unparseable ordering: no JSON array found");
    std::vector<std::string> ids;
    for (const auto& item : *j) {
        if (!item.is_string()) fail(ErrorKind::Data, "unparseable ordering: non-string id");
        ids.push_back(item.get<std::string>());
    }
    return ids;
}

// score(d) = w_s*cos_s + w_t*cos_t + w_g*cos_g, sorted descending with ties
// broken by doc_id ascending.
inline std::vector<RerankCandidate> weighted_rescore(std::vector<RerankCandidate> candidates,
                                                     const ModalityWeights& w) {
    w.validate();
    auto score = [&w](const RerankCandidate& c) {
        return w.semantic * c.cos_semantic + w.lexical * c.cos_lexical + w.graph * c.cos_graph;
    };
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](const RerankCandidate& a, const RerankCandidate& b) {
                         double sa = score(a);
                         double sb = score(b);
                         if (sa != sb) return sa > sb;
                         return a.doc_id < b.doc_id;
                     });
    return candidates;
}

// Validates an LLM-proposed ordering against the candidate set: unknown ids
// are dropped, duplicates keep their first occurrence, and candidates the
// LLM omitted are appended in pre-rank order. The output is always a
// permutation of the input.
inline std::vector<RerankCandidate> apply_listwise_order(const std::vector<RerankCandidate>& candidates,
                                                         const std::vector<std::string>& proposed) {
    std::vector<RerankCandidate> out;
    out.reserve(candidates.size());
    std::vector<bool> used(candidates.size(), false);
    auto find_candidate = [&](const std::string& id) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (!used[i] && candidates[i].doc_id == id) return i;
        }
        return std::nullopt;
    };
    for (const auto& id : proposed) {
        if (auto i = find_candidate(id)) {
            used[*i] = true;
            out.push_back(candidates[*i]);
        }
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!used[i]) out.push_back(candidates[i]);
    }
    return out;
}

struct RerankOutcome {
    std::vector<RerankCandidate> ranked;
    std::optional<ModalityWeights> weights;  // weights mode only
    bool fallback = false;
    std::string raw;  // verbatim LLM output, kept for audit
};

// One rerank exchange with full fallback: no client failure mode aborts the
// run. Weights mode degrades to the static config weights, listwise mode to
// the pre-rank order; both are flagged and the caller logs one warning.
inline RerankOutcome rerank(const RerankRequest& request, LlmClient& client,
                            const ModalityWeights& static_weights, std::ostream* warn = nullptr) {
    RerankOutcome outcome;
    std::string reason;
    try {
        outcome.raw = client.complete(request);
        if (request.mode == RerankMode::Weights) {
            outcome.weights = parse_weight_response(outcome.raw);
            outcome.ranked = weighted_rescore(request.candidates, *outcome.weights);
        } else {
            outcome.ranked = apply_listwise_order(request.candidates,
                                                  parse_listwise_response(outcome.raw));
        }
        return outcome;
    } catch (const std::exception& e) {
        reason = e.what();
    }

    outcome.fallback = true;
    if (request.mode == RerankMode::Weights) {
        outcome.weights = static_weights;
        outcome.ranked = weighted_rescore(request.candidates, static_weights);
    } else {
        outcome.ranked = request.candidates;
    }
    if (warn) *warn << "warning: rerank fallback (" << reason << ")\n";
    return outcome;
}

// Deterministic test double. Weights mode emits the configured weights as
// strict JSON; listwise mode orders candidates by the configured cosine key
// (descending, ties by doc_id ascending). Never performs network I/O. The
// malformed flag makes it emit unparseable text to exercise fallbacks.
class MockLlmClient : public LlmClient {
public:
    struct Options {
        double semantic = 1.0 / 3.0;
        double lexical = 1.0 / 3.0;
        double graph = 1.0 / 3.0;
        std::string listwise_key = "lexical";  // semantic | lexical | graph | reverse
        bool malformed = false;
    };

    MockLlmClient() = default;
    explicit MockLlmClient(Options options) : options_(std::move(options)) {}

    std::string complete(const RerankRequest& request) override {
        if (options_.malformed) return "I think semantics matter most";
        if (request.mode == RerankMode::Weights) {
            nlohmann::json j;
            j["semantic"] = options_.semantic;
            j["lexical"] = options_.lexical;
            j["graph"] = options_.graph;
            return j.dump();
        }
        auto key = [this](const RerankCandidate& c) {
            if (options_.listwise_key == "semantic") return c.cos_semantic;
            if (options_.listwise_key == "graph") return c.cos_graph;
            return c.cos_lexical;
        };
        std::vector<const RerankCandidate*> order;
        order.reserve(request.candidates.size());
        for (const auto& c : request.candidates) order.push_back(&c);
        if (options_.listwise_key == "reverse") {
            std::reverse(order.begin(), order.end());
        } else {
            std::stable_sort(order.begin(), order.end(),
                             [&](const RerankCandidate* a, const RerankCandidate* b) {
                                 double ka = key(*a);
                                 double kb = key(*b);
                                 if (ka != kb) return ka > kb;
                                 return a->doc_id < b->doc_id;
                             });
        }
        nlohmann::json j = nlohmann::json::array();
        for (const auto* c : order) j.push_back(c->doc_id);
        return j.dump();
    }

private:
    Options options_;
};

}  // namespace trimodal
