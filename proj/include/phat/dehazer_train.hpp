#pragma once

// Supervised mean-L1 training of the baseline dehazer, shared by initial
// training on a source domain and by test-time fine-tuning.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "phat/dehazer.hpp"
#include "phat/image.hpp"

namespace phat {

struct DehazerTrainConfig {
  int epochs = 30;
  int batch_size = 1;
  double lr_init = 1e-3;
  double lr_final = 1e-6;
  std::uint64_t seed = 0;
  std::optional<int> crop_size;
  DehazerConfig network;

  void validate() const;
  nlohmann::json to_json() const;
  static DehazerTrainConfig from_json(const nlohmann::json& j);
};

struct SupervisedStep {
  long step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

// Source of (input, target) pairs by index; lets fine-tuning read images
// lazily.
struct PairSource {
  std::size_t count = 0;
  std::function<ImagePair(std::size_t)> get;
};

struct SupervisedSchedule {
  int epochs = 1;
  int batch_size = 1;
  double lr_init = 1e-5;
  double lr_final = 1e-5;
  std::uint64_t seed = 0;
  std::optional<int> crop_size;
};

// Epochs over a seeded per-epoch shuffle, ceil(count / batch) Adam steps
// each, learning rate cosine-annealed per step. Updates `w` in place and
// returns the per-step losses.
std::vector<SupervisedStep> fit_supervised(DehazerWeights& w, const PairSource& data, const SupervisedSchedule& s);

DehazerWeights train_dehazer(const std::vector<ImagePair>& pairs, const DehazerTrainConfig& cfg,
                             std::vector<SupervisedStep>* history = nullptr);

// Mean over pairs of PSNR / SSIM of dehaze(hazy) against clean.
struct DehazeScore {
  double psnr_db = 0.0;
  double ssim = 0.0;
};
DehazeScore score_dehazer(const DehazerWeights& w, const std::vector<ImagePair>& pairs);

}  // namespace phat
