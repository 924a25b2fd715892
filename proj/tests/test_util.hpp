#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "phat/image.hpp"
#include "phat/random.hpp"

namespace testutil {

inline phat::Tensor random_tensor(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  phat::Rng rng(seed);
  phat::Tensor t(c, h, w);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline phat::ImageTensor random_image(int h, int w, std::uint64_t seed) {
  return phat::ImageTensor(random_tensor(3, h, w, seed));
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

inline double max_abs_diff(const phat::Tensor& a, const phat::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("phat_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
