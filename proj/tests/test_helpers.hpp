#pragma once

// Shared bits for the unit tests: scratch files and tiny corpus builders.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "linproxy/corpus.hpp"

namespace testutil {

// Unique temp directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            auto candidate = base / ("linproxy_test_" + std::to_string(::getpid()) + "_" +
                                     std::to_string(counter_++) + "_" + std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                break;
            }
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    out << contents;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline linproxy::corpus::Document doc_from_tokens(const std::string& id,
                                                  const std::vector<std::string>& tokens,
                                                  std::set<std::string> codes = {}) {
    std::string text;
    for (const auto& tok : tokens) {
        if (!text.empty()) text.push_back(' ');
        text += tok;
    }
    return linproxy::corpus::make_document(id, text, std::move(codes));
}

}  // namespace testutil
