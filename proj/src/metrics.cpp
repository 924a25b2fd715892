#include "phat/metrics.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "phat/errors.hpp"

namespace phat {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double s = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    s += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= s;
  return g;
}

// Separable valid-mode Gaussian filter of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w) {
  static const auto g = gaussian_taps();
  const int oh = h - kWindow + 1;
  const int ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[static_cast<std::size_t>(k)] * plane[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const ImageTensor& a, const ImageTensor& b) { return psnr(a.tensor(), b.tensor()); }

double ssim(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "ssim");
  const int h = a.height();
  const int w = a.width();
  if (h < kWindow || w < kWindow) {
    throw ParameterError("ssim needs images of at least 11x11, got " + a.shape_string());
  }
  const std::size_t n = a.plane();
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a[c * n + i];
      y[i] = b[c * n + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w);
    const auto my = filter_valid(y, h, w);
    const auto sxx = filter_valid(xx, h, w);
    const auto syy = filter_valid(yy, h, w);
    const auto sxy = filter_valid(xy, h, w);
    double s = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      s += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    total += s / static_cast<double>(mx.size());
  }
  return total / a.channels();
}

double ssim(const ImageTensor& a, const ImageTensor& b) { return ssim(a.tensor(), b.tensor()); }

void MetricReport::add(std::string name, double psnr_db, double ssim_value) {
  rows.push_back({std::move(name), psnr_db, ssim_value});
  finalize();
}

void MetricReport::finalize() {
  double ps = 0.0;
  double ss = 0.0;
  int finite = 0;
  infinite_psnr_count = 0;
  for (const auto& r : rows) {
    if (std::isfinite(r.psnr_db)) {
      ps += r.psnr_db;
      ++finite;
    } else {
      ++infinite_psnr_count;
    }
    ss += r.ssim;
  }
  mean_psnr_db = finite > 0 ? ps / finite : (rows.empty() ? 0.0 : kPsnrInfinity);
  mean_ssim = rows.empty() ? 0.0 : ss / static_cast<double>(rows.size());
}

namespace {

std::string fmt_db(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

nlohmann::json db_json(double v) { return std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v); }

}  // namespace

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "image,psnr_db,ssim\n";
  for (const auto& r : rows) os << r.name << ',' << fmt_db(r.psnr_db) << ',' << r.ssim << '\n';
  os << "#mean," << fmt_db(mean_psnr_db) << ',' << mean_ssim << '\n';
  os << "#infinite_psnr_count," << infinite_psnr_count << ",\n";
  return os.str();
}

nlohmann::json MetricReport::to_json(const nlohmann::json& config_echo) const {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& r : rows) images.push_back({{"image", r.name}, {"psnr_db", db_json(r.psnr_db)}, {"ssim", r.ssim}});
  return {{"images", images},
          {"aggregate",
           {{"mean_psnr_db", db_json(mean_psnr_db)},
            {"mean_ssim", mean_ssim},
            {"infinite_psnr_count", infinite_psnr_count},
            {"count", rows.size()}}},
          {"config", config_echo}};
}

}  // namespace phat
