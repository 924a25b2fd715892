#include "phat/image.hpp"

#include <string>

#include "phat/errors.hpp"

namespace phat {

void require_resolution(int height, int width, int multiple, const char* what) {
  if (height < 8 || width < 8 || height % multiple != 0 || width % multiple != 0) {
    throw DimensionError(std::string(what) + ": resolution " + std::to_string(height) + "x" +
                         std::to_string(width) + " must be >= 8 and divisible by " +
                         std::to_string(multiple));
  }
}

ImageTensor::ImageTensor(Tensor data) {
  if (data.channels() != 3) {
    throw DimensionError("ImageTensor needs 3 channels, got " + data.shape_string());
  }
  require_resolution(data.height(), data.width(), 8, "ImageTensor");
  data_ = clamp01(std::move(data));
}

ImageTensor::ImageTensor(int height, int width, double fill)
    : ImageTensor(Tensor(3, height, width, fill)) {}

TransmissionMap::TransmissionMap(Tensor data) {
  if (data.channels() != 1) {
    throw DimensionError("TransmissionMap needs 1 channel, got " + data.shape_string());
  }
  for (double v : data.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("transmission value outside [0,1]");
  }
  data_ = std::move(data);
}

TransmissionMap::TransmissionMap(int height, int width, double fill)
    : TransmissionMap(Tensor(1, height, width, fill)) {}

Tensor crop(const Tensor& t, int top, int left, int size) {
  if (top < 0 || left < 0 || size <= 0 || top + size > t.height() || left + size > t.width()) {
    throw DimensionError("crop window outside " + t.shape_string());
  }
  Tensor out(t.channels(), size, size);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) out(c, y, x) = t(c, top + y, left + x);
    }
  }
  return out;
}

}  // namespace phat
