#pragma once

#include <filesystem>
#include <string>

#include "lcz/random.hpp"
#include "lcz/raster.hpp"

namespace lcz::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() /
            ("lczfuse_" + tag + "_" + std::to_string(rng() % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Raster random_raster(int w, int h, double ps, std::uint64_t seed, float lo = 0.0f,
                            float hi = 1.0f) {
  Rng rng(seed);
  Raster r(w, h, ps, 0.0f);
  for (float& v : r.values()) v = lo + (hi - lo) * static_cast<float>(uniform01(rng));
  return r;
}

}  // namespace lcz::test
