#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include <gridguard/errors.hpp>

// Matcher for typed library errors: CHECK_THROWS_MATCHES(expr, gridguard::Error,
// ErrorCodeIs(gridguard::ErrorCode::ConfigError)).
struct ErrorCodeIs : Catch::Matchers::MatcherGenericBase {
    explicit ErrorCodeIs(gridguard::ErrorCode e) : expected(e) {}

    bool match(const gridguard::Error& err) const { return err.code() == expected; }

    std::string describe() const override {
        return "raises error code " + std::to_string(static_cast<int>(expected));
    }

    gridguard::ErrorCode expected;
};

inline std::string fixtures_dir() { return GRIDGUARD_FIXTURES_DIR; }

// Fresh directory under the system temp root, removed on destruction.
struct TempDir {
    TempDir() {
        static std::uint64_t counter = 0;
        dir = std::filesystem::temp_directory_path() /
              ("gridguard-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(dir);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
    }
    std::filesystem::path path(const std::string& name) const { return dir / name; }

    std::filesystem::path dir;
};

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    REQUIRE(f.good());
    f << text;
}
