#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trimodal {

// A text unit with an identifier and optional title. All three modality
// encoders consume full_text().
struct Document {
    std::string id;
    std::string title;
    std::string text;

    std::string full_text() const {
        if (title.empty()) return text;
        if (text.empty()) return title;
        return title + ". " + text;
    }
};

struct Query {
    std::string id;
    std::string text;
};

using DenseVector = std::vector<double>;
using GraphEmbedding = DenseVector;  // dimension matches the semantic encoder

// Sparse non-negative vector. Zero entries are never stored.
struct SparseVector {
    std::vector<std::uint32_t> indices;  // strictly ascending, all < dim
    std::vector<double> values;          // parallel to indices, all > 0
    std::uint32_t dim = 0;

    std::size_t nnz() const { return indices.size(); }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

inline double l2_norm(const SparseVector& v) {
    double s = 0.0;
    for (double x : v.values) s += x * x;
    return std::sqrt(s);
}

// Cosine with the zero convention: either side (near-)zero yields 0.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (na <= 1e-12 || nb <= 1e-12) return 0.0;
    return dot(a, b) / (na * nb);
}

}  // namespace trimodal
