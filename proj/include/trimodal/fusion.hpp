#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trimodal/error.hpp"
#include "trimodal/types.hpp"

namespace trimodal {

// Per-modality vectors for one text: semantic s, lexical t, graph g.
struct TriModalEmbedding {
    DenseVector semantic;
    SparseVector lexical;
    GraphEmbedding graph;
};

// Hybrid vector layout: [0, ds) semantic, [ds, ds+vocab) lexical,
// [ds+vocab, ds+vocab+ds) graph.
struct FusionDims {
    std::uint32_t semantic = 0;
    std::uint32_t vocab = 0;

    std::uint32_t graph() const { return semantic; }
    std::size_t total() const { return 2 * static_cast<std::size_t>(semantic) + vocab; }

    bool operator==(const FusionDims&) const = default;
};

struct FusionConfig {
    double alpha = 1.0;  // semantic scale
    double beta = 1.0;   // lexical scale
    double gamma = 1.0;  // graph scale
    FusionDims dims;

    void validate() const {
        if (alpha < 0 || beta < 0 || gamma < 0 || alpha + beta + gamma <= 0) {
            fail(ErrorKind::Usage, "fusion scales must be non-negative with positive sum");
        }
    }
};

// Fused unit-norm vector. is_zero flags texts where every modality block is
// empty (the vector is then all-zero rather than unit-norm). fingerprint is
// stamped by the embedder so search can prove index and query were produced
// by the same configuration.
struct HybridVector {
    std::vector<double> values;
    bool is_zero = false;
    std::string fingerprint;
};

// v / ||v||_2, or the vector unchanged when the norm is below 1e-12.
inline DenseVector normalize_block(DenseVector v) {
    double n = l2_norm(v);
    if (n > 1e-12) {
        for (double& x : v) x /= n;
    }
    return v;
}

inline SparseVector normalize_block(SparseVector v) {
    double n = l2_norm(v);
    if (n > 1e-12) {
        for (double& x : v.values) x /= n;
    }
    return v;
}

inline std::span<const double> semantic_block(std::span<const double> hybrid, const FusionDims& dims) {
    return hybrid.subspan(0, dims.semantic);
}

inline std::span<const double> lexical_block(std::span<const double> hybrid, const FusionDims& dims) {
    return hybrid.subspan(dims.semantic, dims.vocab);
}

inline std::span<const double> graph_block(std::span<const double> hybrid, const FusionDims& dims) {
    return hybrid.subspan(dims.semantic + static_cast<std::size_t>(dims.vocab), dims.graph());
}

// e' = [alpha*s_hat; beta*t_hat; gamma*g_hat], e = e' / ||e'||_2. Each block
// is L2-normalized before scaling; empty blocks stay zero. An all-zero
// tri-modal input fuses to the flagged all-zero hybrid.
inline HybridVector fuse(const TriModalEmbedding& tri, const FusionConfig& cfg) {
    cfg.validate();
    if (tri.semantic.size() != cfg.dims.semantic || tri.lexical.dim != cfg.dims.vocab ||
        tri.graph.size() != cfg.dims.graph()) {
        fail(ErrorKind::Usage, "tri-modal embedding dimensions do not match fusion config");
    }

    HybridVector h;
    h.values.assign(cfg.dims.total(), 0.0);

    DenseVector s_hat = normalize_block(tri.semantic);
    for (std::uint32_t i = 0; i < cfg.dims.semantic; ++i) h.values[i] = cfg.alpha * s_hat[i];

    SparseVector t_hat = normalize_block(tri.lexical);
    for (std::size_t i = 0; i < t_hat.nnz(); ++i) {
        h.values[cfg.dims.semantic + t_hat.indices[i]] = cfg.beta * t_hat.values[i];
    }

    GraphEmbedding g_hat = normalize_block(tri.graph);
    std::size_t g_off = cfg.dims.semantic + static_cast<std::size_t>(cfg.dims.vocab);
    for (std::uint32_t i = 0; i < cfg.dims.graph(); ++i) h.values[g_off + i] = cfg.gamma * g_hat[i];

    double n = l2_norm(h.values);
    if (n <= 1e-12) {
        h.values.assign(cfg.dims.total(), 0.0);
        h.is_zero = true;
        return h;
    }
    for (double& x : h.values) x /= n;
    return h;
}

}  // namespace trimodal
