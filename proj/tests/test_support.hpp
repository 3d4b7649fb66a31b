#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace msnn_test {

// Unique scratch directory per test case, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("msnn_" + tag + "_" + std::to_string(++counter) + "_" +
                 std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string dir() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

} // namespace msnn_test
