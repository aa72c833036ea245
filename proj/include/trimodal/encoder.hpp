#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "trimodal/digest.hpp"
#include "trimodal/error.hpp"
#include "trimodal/lexical.hpp"
#include "trimodal/types.hpp"

namespace trimodal {

// Identifies an embedding source. endpoint is either "builtin:test" for the
// deterministic offline encoder or an HTTP base URL. Known deployment dims:
// minilm-v6 -> 384, bge-large -> 1024.
struct EncoderProfile {
    std::string name;
    std::uint32_t dim = 0;
    std::string endpoint = "builtin:test";
    std::uint64_t seed = 42;  // builtin:test only

    std::string fingerprint() const {
        return "enc=" + name + ":dim=" + std::to_string(dim) + ":ep=" + endpoint +
               (endpoint == "builtin:test" ? ":seed=" + std::to_string(seed) : "");
    }

    static std::uint32_t preset_dim(std::string_view name) {
        if (name == "minilm-v6") return 384;
        if (name == "bge-large") return 1024;
        return 0;
    }
};

// Dense text embedding source. Implementations must be deterministic per
// text, order- and length-preserving, and safe for concurrent callers.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::vector<DenseVector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::uint32_t dim() const = 0;
    virtual std::string fingerprint() const = 0;
};

// Deterministic offline embedding: each token hashes to a reproducible
// pseudo-random unit vector and the text embeds as the normalized token-
// vector sum. Identical texts map to identical vectors; texts sharing more
// tokens land closer in cosine. Empty text yields the zero vector.
inline DenseVector test_encoder(std::uint32_t dim, std::string_view text, std::uint64_t seed = 42) {
    DenseVector acc(dim, 0.0);
    auto tokens = tokenize(text);
    if (tokens.empty()) return acc;

    DenseVector tok_vec(dim);
    for (const auto& tok : tokens) {
        SplitMix64 rng(fnv1a64(tok) ^ (0x9e3779b97f4a7c15ULL * (seed + 1)));
        for (std::uint32_t i = 0; i < dim; ++i) tok_vec[i] = rng.next_unit() * 2.0 - 1.0;
        double n = l2_norm(tok_vec);
        if (n <= 1e-12) {
            tok_vec.assign(dim, 0.0);
            tok_vec[0] = 1.0;
            n = 1.0;
        }
        for (std::uint32_t i = 0; i < dim; ++i) acc[i] += tok_vec[i] / n;
    }
    double n = l2_norm(acc);
    if (n <= 1e-12) return DenseVector(dim, 0.0);
    for (double& x : acc) x /= n;
    return acc;
}

class HashEncoder : public EmbeddingProvider {
public:
    explicit HashEncoder(EncoderProfile profile) : profile_(std::move(profile)) {
        if (profile_.dim < 2) fail(ErrorKind::Usage, "test encoder requires dim >= 2");
    }

    std::vector<DenseVector> embed(const std::vector<std::string>& texts) override {
        std::vector<DenseVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(test_encoder(profile_.dim, t, profile_.seed));
        return out;
    }

    std::uint32_t dim() const override { return profile_.dim; }
    std::string fingerprint() const override { return profile_.fingerprint(); }

private:
    EncoderProfile profile_;
};

}  // namespace trimodal
