#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "trimodal/types.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() {
    return std::filesystem::path(TRIMODAL_SOURCE_DIR);
}

inline std::filesystem::path toy_dataset_dir() {
    return source_dir() / "data" / "toy";
}

// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("trimodal_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::trunc | std::ios::binary);
    f << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// Random word soup documents for synthetic corpora.
inline std::vector<trimodal::Document> synthetic_corpus(std::size_t n_docs, std::mt19937& rng,
                                                        std::size_t lexicon_size = 200,
                                                        std::size_t min_len = 3,
                                                        std::size_t max_len = 20) {
    std::vector<std::string> lexicon;
    lexicon.reserve(lexicon_size);
    for (std::size_t i = 0; i < lexicon_size; ++i) lexicon.push_back("word" + std::to_string(i));

    std::uniform_int_distribution<std::size_t> len_dist(min_len, max_len);
    std::uniform_int_distribution<std::size_t> word_dist(0, lexicon.size() - 1);

    std::vector<trimodal::Document> corpus;
    corpus.reserve(n_docs);
    for (std::size_t d = 0; d < n_docs; ++d) {
        std::string text;
        for (std::size_t w = 0, len = len_dist(rng); w < len; ++w) {
            if (!text.empty()) text += ' ';
            text += lexicon[word_dist(rng)];
        }
        corpus.push_back({"doc" + std::to_string(d), "", text});
    }
    return corpus;
}

}  // namespace testing_support
