#include "phat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phat/errors.hpp"

namespace phat {

Tensor::Tensor(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw DimensionError("tensor dimensions must be positive, got " + std::to_string(channels) +
                         "x" + std::to_string(height) + "x" + std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

std::string Tensor::shape_string() const {
  return std::to_string(channels_) + "x" + std::to_string(height_) + "x" + std::to_string(width_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::mean() const { return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size()); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

Tensor downsample2(const Tensor& t) {
  if (t.height() % 2 != 0 || t.width() % 2 != 0) {
    throw DimensionError("downsample2: odd resolution " + t.shape_string());
  }
  const int h = t.height() / 2;
  const int w = t.width() / 2;
  Tensor out(t.channels(), h, w);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out(c, y, x) = 0.25 * (t(c, 2 * y, 2 * x) + t(c, 2 * y, 2 * x + 1) +
                               t(c, 2 * y + 1, 2 * x) + t(c, 2 * y + 1, 2 * x + 1));
      }
    }
  }
  return out;
}

namespace {

// Neighbour index and weights of output sample o along an axis of length n.
struct Tap {
  int near;
  int far;
};

Tap upsample_tap(int o, int n) {
  const int i = o / 2;
  const int j = (o % 2 == 0) ? std::max(i - 1, 0) : std::min(i + 1, n - 1);
  return {i, j};
}

}  // namespace

Tensor upsample2_bilinear(const Tensor& t) {
  const int h = t.height();
  const int w = t.width();
  Tensor rows(t.channels(), 2 * h, w);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < 2 * h; ++y) {
      const Tap ty = upsample_tap(y, h);
      for (int x = 0; x < w; ++x) rows(c, y, x) = 0.75 * t(c, ty.near, x) + 0.25 * t(c, ty.far, x);
    }
  }
  Tensor out(t.channels(), 2 * h, 2 * w);
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < 2 * h; ++y) {
      for (int x = 0; x < 2 * w; ++x) {
        const Tap tx = upsample_tap(x, w);
        out(c, y, x) = 0.75 * rows(c, y, tx.near) + 0.25 * rows(c, y, tx.far);
      }
    }
  }
  return out;
}

Tensor upsample2_bilinear_adjoint(const Tensor& g, int in_h, int in_w) {
  if (g.height() != 2 * in_h || g.width() != 2 * in_w) {
    throw DimensionError("upsample2_bilinear_adjoint: gradient shape " + g.shape_string());
  }
  Tensor rows(g.channels(), 2 * in_h, in_w);
  for (int c = 0; c < g.channels(); ++c) {
    for (int y = 0; y < 2 * in_h; ++y) {
      for (int x = 0; x < 2 * in_w; ++x) {
        const Tap tx = upsample_tap(x, in_w);
        rows(c, y, tx.near) += 0.75 * g(c, y, x);
        rows(c, y, tx.far) += 0.25 * g(c, y, x);
      }
    }
  }
  Tensor out(g.channels(), in_h, in_w);
  for (int c = 0; c < g.channels(); ++c) {
    for (int y = 0; y < 2 * in_h; ++y) {
      const Tap ty = upsample_tap(y, in_h);
      for (int x = 0; x < in_w; ++x) {
        out(c, ty.near, x) += 0.75 * rows(c, y, x);
        out(c, ty.far, x) += 0.25 * rows(c, y, x);
      }
    }
  }
  return out;
}

Tensor upsample2_nearest(const Tensor& t) {
  Tensor out(t.channels(), 2 * t.height(), 2 * t.width());
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) out(c, y, x) = t(c, y / 2, x / 2);
    }
  }
  return out;
}

Tensor flip_rows(const Tensor& t) {
  Tensor out(t.channels(), t.height(), t.width());
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < t.height(); ++y) {
      const int src = t.height() - 1 - y;
      const double* row = t.raw() + (static_cast<std::size_t>(c) * t.height() + src) * t.width();
      std::copy_n(row, t.width(), &out(c, y, 0));
    }
  }
  return out;
}

Tensor clamp01(Tensor t) {
  for (double& v : t.values()) v = std::clamp(v, 0.0, 1.0);
  return t;
}

}  // namespace phat
