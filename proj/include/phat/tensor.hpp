#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace phat {

// Dense channels-first (C x H x W) array of doubles. Images, latent
// features, per-channel vectors (C x 1 x 1) and scalars (1 x 1 x 1) all use
// this layout.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0);

  static Tensor scalar(double v) { return Tensor(1, 1, 1, v); }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int c, int y, int x) { return data_[index(c, y, x)]; }
  double operator()(int c, int y, int x) const { return data_[index(c, y, x)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* raw() { return data_.data(); }
  const double* raw() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Tensor& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  std::string shape_string() const;

  void fill(double v);
  double sum() const;
  double mean() const;
  bool all_finite() const;

  // Bitwise equality of shape and contents.
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Throws DimensionError naming `what` when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// 2x2 box average; identical to bilinear x1/2 resampling with half-pixel
// centers.
Tensor downsample2(const Tensor& t);
// Bilinear x2 upsampling with half-pixel centers and edge clamping.
Tensor upsample2_bilinear(const Tensor& t);
// Transpose of upsample2_bilinear (used for its gradient).
Tensor upsample2_bilinear_adjoint(const Tensor& g, int in_h, int in_w);
Tensor upsample2_nearest(const Tensor& t);
Tensor flip_rows(const Tensor& t);

Tensor clamp01(Tensor t);

}  // namespace phat
