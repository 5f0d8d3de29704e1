#ifndef COGRID_TEST_UTIL_HPP
#define COGRID_TEST_UTIL_HPP

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

namespace cogrid::test {

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("cogrid_" + tag + "_" + std::to_string(::getpid()) + "_" +
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

}  // namespace cogrid::test

#endif  // COGRID_TEST_UTIL_HPP
