#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "gradeforge/workspace.hpp"

namespace testing_support {

inline std::filesystem::path fixture_dir(const std::string& name) {
  return std::filesystem::path(GRADEFORGE_FIXTURES_DIR) / name;
}

// A scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gradeforge_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Copies a fixture workspace into `dir` so tests can write snapshots.
inline gradeforge::Workspace copy_workspace(const std::string& fixture, const std::filesystem::path& dir) {
  std::filesystem::copy(fixture_dir(fixture), dir, std::filesystem::copy_options::recursive);
  return gradeforge::Workspace::open(dir);
}

}  // namespace testing_support
