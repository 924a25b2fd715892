#pragma once

#include "phat/tensor.hpp"

namespace phat {

// H x W x 3 RGB image with intensities in [0,1], stored channels-first.
// H and W are at least 8 and divisible by 8 so the 1/8-resolution latent
// pathway is well defined.
class ImageTensor {
 public:
  ImageTensor() = default;
  // Clamps every element into [0,1].
  explicit ImageTensor(Tensor data);
  ImageTensor(int height, int width, double fill = 0.0);

  int height() const { return data_.height(); }
  int width() const { return data_.width(); }
  const Tensor& tensor() const { return data_; }

  double operator()(int c, int y, int x) const { return data_(c, y, x); }

  friend bool operator==(const ImageTensor& a, const ImageTensor& b) { return a.data_ == b.data_; }

 private:
  Tensor data_;
};

// Single-channel map with values in [0,1].
class TransmissionMap {
 public:
  TransmissionMap() = default;
  // Throws ParameterError if any value falls outside [0,1].
  explicit TransmissionMap(Tensor data);
  TransmissionMap(int height, int width, double fill);

  int height() const { return data_.height(); }
  int width() const { return data_.width(); }
  const Tensor& tensor() const { return data_; }
  double operator()(int y, int x) const { return data_(0, y, x); }

  friend bool operator==(const TransmissionMap& a, const TransmissionMap& b) {
    return a.data_ == b.data_;
  }

 private:
  Tensor data_;
};

struct ImagePair {
  ImageTensor hazy;
  ImageTensor clean;
};

// Top-left aligned size x size window of every channel.
Tensor crop(const Tensor& t, int top, int left, int size);

// Throws DimensionError unless both sides are >= 8 and divisible by `multiple`.
void require_resolution(int height, int width, int multiple, const char* what);

}  // namespace phat
