#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "trimodal/digest.hpp"
#include "trimodal/error.hpp"
#include "trimodal/index.hpp"

namespace trimodal {

// Index file layout (all integers and floats little-endian):
//   magic "TMX1"
//   u32 version
//   u64 n_docs, u32 ds, u32 V, f64 alpha, f64 beta, f64 gamma
//   doc_id table: n_docs x (u32 length + UTF-8 bytes)
//   matrix: n_docs x (2*ds + V) f32, row-major
//   vocabulary: u64 n_docs, u32 n_terms, per term (u32 len + bytes + u64 df)
//   catalog:    u64 n_docs, u32 n_entities, per entity (u32 len + bytes + u64 df)
//   fingerprints: u32 count, per string (u32 len + bytes)
//   u32 CRC32 over all prior bytes
//
// The matrix is quantized to f32 on save. Loading widens exactly (f32 -> f64
// is lossless), so save -> load -> save reproduces the file byte for byte.
inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr std::string_view kIndexMagic = "TMX1";

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }
    void raw(std::string_view s) { buf_.append(s); }

    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str() {
        std::uint32_t len = u32();
        need(len);
        std::string s(data_.substr(pos_, len));
        pos_ += len;
        return s;
    }
    std::string_view raw(std::size_t len) {
        need(len);
        auto s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    unsigned char byte() { return static_cast<unsigned char>(data_[pos_++]); }
    void need(std::size_t n) {
        if (pos_ + n > data_.size()) fail(ErrorKind::FormatTruncated, "index file truncated");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline void save_index(const HybridIndex& index, const std::filesystem::path& path) {
    detail::ByteWriter w;
    w.raw(kIndexMagic);
    w.u32(kIndexVersion);
    w.u64(index.size());
    w.u32(index.config.dims.semantic);
    w.u32(index.config.dims.vocab);
    w.f64(index.config.alpha);
    w.f64(index.config.beta);
    w.f64(index.config.gamma);

    for (const auto& id : index.doc_ids) w.str(id);
    for (const auto& row : index.rows) {
        for (double x : row) w.f32(static_cast<float>(x));
    }

    w.u64(index.vocab.n_docs);
    w.u32(index.vocab.dim());
    for (std::size_t i = 0; i < index.vocab.terms.size(); ++i) {
        w.str(index.vocab.terms[i]);
        w.u64(index.vocab.df[i]);
    }

    w.u64(index.catalog.n_docs);
    w.u32(static_cast<std::uint32_t>(index.catalog.entities.size()));
    for (std::size_t i = 0; i < index.catalog.entities.size(); ++i) {
        w.str(index.catalog.entities[i]);
        w.u64(index.catalog.df[i]);
    }

    w.u32(2);
    w.str(index.encoder_fingerprint);
    w.str(index.fingerprint);

    std::string out = w.bytes();
    std::uint32_t crc = Crc32::of(out);
    detail::ByteWriter tail;
    tail.u32(crc);
    out += tail.bytes();

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorKind::Data, "cannot open for writing: " + path.string());
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) fail(ErrorKind::Data, "write failed: " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

inline HybridIndex load_index(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Data, "cannot open index file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (data.size() < kIndexMagic.size() + 8) {
        fail(ErrorKind::FormatTruncated, "index file truncated: " + path.string());
    }
    std::string_view body(data.data(), data.size() - 4);
    detail::ByteReader tail(std::string_view(data.data() + data.size() - 4, 4));
    if (tail.u32() != Crc32::of(body)) {
        fail(ErrorKind::FormatChecksum, "index file checksum mismatch: " + path.string());
    }

    detail::ByteReader r(body);
    if (r.raw(kIndexMagic.size()) != kIndexMagic) {
        fail(ErrorKind::FormatVersion, "not a TMX1 index file: " + path.string());
    }
    std::uint32_t version = r.u32();
    if (version != kIndexVersion) {
        fail(ErrorKind::FormatVersion,
             "unsupported index version " + std::to_string(version) + ": " + path.string());
    }

    HybridIndex index;
    std::uint64_t n_docs = r.u64();
    index.config.dims.semantic = r.u32();
    index.config.dims.vocab = r.u32();
    index.config.alpha = r.f64();
    index.config.beta = r.f64();
    index.config.gamma = r.f64();

    index.doc_ids.reserve(n_docs);
    for (std::uint64_t i = 0; i < n_docs; ++i) index.doc_ids.push_back(r.str());

    std::size_t width = index.config.dims.total();
    index.rows.reserve(n_docs);
    index.zero_flags.reserve(n_docs);
    for (std::uint64_t i = 0; i < n_docs; ++i) {
        std::vector<double> row(width);
        bool all_zero = true;
        for (std::size_t j = 0; j < width; ++j) {
            row[j] = static_cast<double>(r.f32());
            all_zero = all_zero && row[j] == 0.0;
        }
        index.rows.push_back(std::move(row));
        index.zero_flags.push_back(all_zero);
    }

    index.vocab.n_docs = r.u64();
    std::uint32_t n_terms = r.u32();
    index.vocab.terms.reserve(n_terms);
    index.vocab.df.reserve(n_terms);
    for (std::uint32_t i = 0; i < n_terms; ++i) {
        index.vocab.terms.push_back(r.str());
        index.vocab.df.push_back(r.u64());
    }

    index.catalog.n_docs = r.u64();
    std::uint32_t n_entities = r.u32();
    index.catalog.entities.reserve(n_entities);
    index.catalog.df.reserve(n_entities);
    for (std::uint32_t i = 0; i < n_entities; ++i) {
        index.catalog.entities.push_back(r.str());
        index.catalog.df.push_back(r.u64());
    }

    std::uint32_t n_prints = r.u32();
    if (n_prints != 2) fail(ErrorKind::FormatTruncated, "unexpected fingerprint count");
    index.encoder_fingerprint = r.str();
    index.fingerprint = r.str();

    index.rebuild_lookup();
    return index;
}

}  // namespace trimodal
