#pragma once

// Shared helpers for the test suites.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <doctest.h>

#include "xhate/corpus.hpp"

namespace xhate::test {

inline std::string fixture_dir() {
    return std::string(XHATE_SOURCE_DIR) + "/tests/fixtures";
}

inline std::string lexicon_dir() {
    return std::string(XHATE_SOURCE_DIR) + "/data/lexicons";
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("xhate-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str(const std::string& name = "") const {
        return name.empty() ? path.string() : (path / name).string();
    }
};

inline TextSample sample(std::string id, std::string text, std::string lang, int label,
                         Source source = Source::MLMA) {
    TextSample s;
    s.id = std::move(id);
    s.text = std::move(text);
    s.language = std::move(lang);
    s.label = label;
    s.source = source;
    return s;
}

}  // namespace xhate::test
