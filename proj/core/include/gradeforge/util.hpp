#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace gradeforge {

std::string read_file(const std::filesystem::path& path);
// Creates parent directories; writes through a temporary file and rename.
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

// std::mt19937_64 has a standard-mandated output sequence, unlike the std
// distributions; bounded draws and shuffles are done here so that seeded
// results are identical across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Combines a seed with labels (hashes, ids) into a new seed.
  static std::uint64_t derive(std::uint64_t seed, std::string_view label);

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gradeforge
