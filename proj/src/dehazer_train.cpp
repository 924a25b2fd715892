#include "phat/dehazer_train.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "phat/errors.hpp"
#include "phat/losses.hpp"
#include "phat/metrics.hpp"
#include "phat/optim.hpp"
#include "phat/random.hpp"

namespace phat {

namespace {

constexpr std::uint64_t kShuffleStream = 0x64686373;  // "dhcs"
constexpr std::uint64_t kCropStream = 0x64686370;     // "dhcp"

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("dehazer config key '") + key + "' has the wrong type");
  }
}

}  // namespace

void DehazerTrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr_init >= 0.0) || !(lr_final >= 0.0) || lr_final > lr_init) {
    throw ConfigError("learning rates must satisfy 0 <= lr_final <= lr_init");
  }
  network.validate();
  if (crop_size && (*crop_size < 8 || *crop_size % std::max(8, network.resolution_multiple()) != 0)) {
    throw ConfigError("dehazer crop_size must be divisible by " +
                      std::to_string(std::max(8, network.resolution_multiple())));
  }
}

nlohmann::json DehazerTrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"lr_init", lr_init},
          {"lr_final", lr_final},
          {"seed", seed},
          {"crop_size", crop_size ? nlohmann::json(*crop_size) : nlohmann::json(nullptr)},
          {"depth", network.depth},
          {"base_channels", network.base_channels},
          {"res_blocks", network.res_blocks}};
}

DehazerTrainConfig DehazerTrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("dehazer config must be a JSON object");
  static const std::set<std::string> kKeys{"epochs", "batch_size", "lr_init",       "lr_final",  "seed",
                                           "crop_size", "depth",   "base_channels", "res_blocks"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown dehazer config key '" + key + "'");
  }
  DehazerTrainConfig c;
  read_key(j, "epochs", c.epochs);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "lr_init", c.lr_init);
  read_key(j, "lr_final", c.lr_final);
  read_key(j, "seed", c.seed);
  if (j.contains("crop_size") && !j.at("crop_size").is_null()) {
    int size = 0;
    read_key(j, "crop_size", size);
    c.crop_size = size;
  }
  read_key(j, "depth", c.network.depth);
  read_key(j, "base_channels", c.network.base_channels);
  read_key(j, "res_blocks", c.network.res_blocks);
  c.validate();
  return c;
}

std::vector<SupervisedStep> fit_supervised(DehazerWeights& w, const PairSource& data, const SupervisedSchedule& s) {
  if (data.count == 0) throw ConfigError("supervised fitting needs at least one pair");
  if (s.epochs < 0 || s.batch_size < 1) throw ConfigError("epochs must be >= 0 and batch_size >= 1");
  const long per_epoch = static_cast<long>((data.count + static_cast<std::size_t>(s.batch_size) - 1) /
                                           static_cast<std::size_t>(s.batch_size));
  const long total = per_epoch * s.epochs;
  const auto params = w.params();
  Adam adam;
  std::vector<SupervisedStep> history;
  long step = 0;
  for (int epoch = 0; epoch < s.epochs; ++epoch) {
    const auto order = permutation(data.count, mix_seed(mix_seed(s.seed, kShuffleStream), static_cast<std::uint64_t>(epoch)));
    for (long b = 0; b < per_epoch; ++b, ++step) {
      const double lr = cosine_lr(step, total, s.lr_init, s.lr_final);
      nn::zero_grads(params);
      const std::size_t begin = static_cast<std::size_t>(b) * static_cast<std::size_t>(s.batch_size);
      const std::size_t end = std::min(data.count, begin + static_cast<std::size_t>(s.batch_size));
      double loss_sum = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const ImagePair pair = data.get(static_cast<std::size_t>(order[k]));
        Tensor input = pair.hazy.tensor();
        Tensor target = pair.clean.tensor();
        require_same_shape(input, target, "supervised pair");
        if (s.crop_size && *s.crop_size <= input.height() && *s.crop_size <= input.width()) {
          Rng rng(mix_seed(mix_seed(s.seed, kCropStream), static_cast<std::uint64_t>(step) * 1024 + (k - begin)));
          const int top = rng.below(input.height() - *s.crop_size + 1);
          const int left = rng.below(input.width() - *s.crop_size + 1);
          input = crop(input, top, left, *s.crop_size);
          target = crop(target, top, left, *s.crop_size);
        }
        const ad::Var loss = ad::mean_abs_diff(dehazer_graph(w, ad::constant(input)), target);
        if (!std::isfinite(loss.value()[0])) {
          nn::zero_grads(params);
          throw DivergenceError("non-finite dehazer loss at step " + std::to_string(step));
        }
        ad::backward(loss);
        loss_sum += loss.value()[0];
      }
      const std::size_t n = end - begin;
      if (n > 1) scale_gradients(params, 1.0 / static_cast<double>(n));
      adam.step(params, lr);
      history.push_back({step, lr, loss_sum / static_cast<double>(n)});
    }
  }
  nn::zero_grads(params);
  return history;
}

DehazerWeights train_dehazer(const std::vector<ImagePair>& pairs, const DehazerTrainConfig& cfg,
                             std::vector<SupervisedStep>* history) {
  cfg.validate();
  DehazerWeights w = DehazerWeights::init(cfg.network, cfg.seed);
  PairSource source{pairs.size(), [&](std::size_t k) { return pairs[k]; }};
  SupervisedSchedule s{cfg.epochs, cfg.batch_size, cfg.lr_init, cfg.lr_final, cfg.seed, cfg.crop_size};
  auto steps = fit_supervised(w, source, s);
  if (history) *history = std::move(steps);
  return w;
}

DehazeScore score_dehazer(const DehazerWeights& w, const std::vector<ImagePair>& pairs) {
  if (pairs.empty()) throw ConfigError("cannot score a dehazer on an empty set");
  DehazeScore score;
  for (const auto& p : pairs) {
    const ImageTensor out = dehaze(p.hazy, w);
    score.psnr_db += psnr(out, p.clean);
    score.ssim += ssim(out, p.clean);
  }
  score.psnr_db /= static_cast<double>(pairs.size());
  score.ssim /= static_cast<double>(pairs.size());
  return score;
}

}  // namespace phat
