#pragma once

// Optimisation loop for PHATNet on paired source-domain data.
//
// Each step draws a batch from a per-epoch permutation and, for every pair
// i in the batch, one unpaired clean image j != i. The objective is
//   L = L_htc(PHATNet(hazy_i, clean_i), hazy_i) + L_cl(PHATNet(clean_i, clean_j), clean_j)
// with per-sample gradients averaged over the batch. Adam with a per-step
// cosine-annealed learning rate. All randomness is keyed on (seed, epoch) or
// (seed, step), so a run resumed from a checkpoint replays exactly.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "phat/checkpoint.hpp"
#include "phat/image.hpp"
#include "phat/optim.hpp"
#include "phat/phatnet.hpp"

namespace phat {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 1;
  double lr_init = 1e-4;
  double lr_final = 1e-7;
  std::uint64_t seed = 0;
  int stages = 3;
  int channels = 32;
  int res_blocks = 2;
  int checkpoint_every = 0;  // steps; 0 disables periodic checkpoints
  std::optional<int> crop_size;
  bool content_leakage = true;  // false trains the HTC-only ablation
  double clip_grad_norm = 0.0;  // 0 disables clipping

  void validate() const;
  PhatnetConfig network() const;
  nlohmann::json to_json() const;
  // Rejects unknown keys and wrong types; missing keys take defaults.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct LossRecord {
  long step = 0;
  double lr = 0.0;
  double htc = 0.0;
  double cl = 0.0;
  double total = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

struct TrainState {
  long step = 0;
  std::uint64_t seed = 0;
  PhatnetWeights weights;
  Adam optimizer;
  std::vector<LossRecord> history;

  static TrainState fresh(const TrainConfig& cfg);
};

// One training sample after cropping.
struct StepSample {
  Tensor hazy;
  Tensor clean;
  Tensor unpaired_clean;
};

long steps_per_epoch(std::size_t pairs, int batch_size);
long total_steps(const TrainConfig& cfg, std::size_t pairs);

// One Adam update at learning rate cosine_lr(state.step, total). Throws
// DivergenceError on a non-finite loss (weights are left untouched).
void train_step(TrainState& state, std::span<const StepSample> batch, const TrainConfig& cfg, long total);

// The samples consumed at `step` (deterministic in seed and step).
std::vector<StepSample> samples_for_step(const std::vector<ImagePair>& data, const TrainConfig& cfg, long step);

struct TrainOptions {
  std::optional<long> stop_at_step;  // exclusive; for interrupted runs
  std::filesystem::path checkpoint_dir;  // periodic and diagnostic checkpoints
  std::function<void(const TrainState&)> on_step;
};

// Runs (or continues) training until the configured number of steps.
// Throws ConfigError when fewer than two pairs are given (content leakage
// needs j != i).
TrainState train(const std::vector<ImagePair>& data, const TrainConfig& cfg,
                 std::optional<TrainState> resume = std::nullopt, const TrainOptions& options = {});

Archive train_state_archive(const TrainState& state, const TrainConfig& cfg);
TrainState train_state_from_archive(const Archive& archive);
void save_train_state(const std::filesystem::path& path, const TrainState& state, const TrainConfig& cfg);
TrainState load_train_state(const std::filesystem::path& path);

// "step,lr,htc,cl,total" rows.
std::string loss_history_csv(const std::vector<LossRecord>& history);

}  // namespace phat
