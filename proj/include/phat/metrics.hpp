#pragma once

// Full-reference quality metrics on [0,1] images.
//
// PSNR uses peak 1.0: 10 log10(1 / MSE), +inf when the images are equal.
// SSIM uses an 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
// evaluated on the valid region of each channel and averaged over channels.

#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phat/image.hpp"

namespace phat {

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

double psnr(const ImageTensor& a, const ImageTensor& b);
double psnr(const Tensor& a, const Tensor& b);
// Throws ParameterError when either side is below 11 pixels.
double ssim(const ImageTensor& a, const ImageTensor& b);
double ssim(const Tensor& a, const Tensor& b);

struct MetricRow {
  std::string name;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  double mean_psnr_db = 0.0;  // over finite PSNR values only
  double mean_ssim = 0.0;
  int infinite_psnr_count = 0;

  void add(std::string name, double psnr_db, double ssim_value);
  // Recomputes the aggregates from rows.
  void finalize();

  std::string to_csv() const;
  nlohmann::json to_json(const nlohmann::json& config_echo = nlohmann::json::object()) const;
};

}  // namespace phat
