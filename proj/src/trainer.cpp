#include "phat/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "phat/errors.hpp"
#include "phat/losses.hpp"
#include "phat/model_io.hpp"
#include "phat/random.hpp"

namespace phat {

namespace {

constexpr std::uint64_t kPermutationStream = 0x7065726d;  // "perm"
constexpr std::uint64_t kSampleStream = 0x73616d70;       // "samp"

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

Tensor random_crop(const Tensor& t, int size, Rng& rng, int& top, int& left) {
  top = rng.below(t.height() - size + 1);
  left = rng.below(t.width() - size + 1);
  return crop(t, top, left, size);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr_init >= 0.0) || !(lr_final >= 0.0)) throw ConfigError("learning rates must be >= 0");
  if (lr_final > lr_init) throw ConfigError("lr_final must not exceed lr_init");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (crop_size && (*crop_size < 8 || *crop_size % network().resolution_multiple() != 0)) {
    throw ConfigError("crop_size must be divisible by " + std::to_string(network().resolution_multiple()));
  }
  if (clip_grad_norm < 0.0) throw ConfigError("clip_grad_norm must be >= 0");
  network().validate();
}

PhatnetConfig TrainConfig::network() const {
  PhatnetConfig n;
  n.stages = stages;
  n.phdt.channels = channels;
  n.phdt.res_blocks = res_blocks;
  return n;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"lr_init", lr_init},
          {"lr_final", lr_final},
          {"seed", seed},
          {"stages", stages},
          {"channels", channels},
          {"res_blocks", res_blocks},
          {"checkpoint_every", checkpoint_every},
          {"crop_size", crop_size ? nlohmann::json(*crop_size) : nlohmann::json(nullptr)},
          {"content_leakage", content_leakage},
          {"clip_grad_norm", clip_grad_norm}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  static const std::set<std::string> kKeys{"epochs",     "batch_size", "lr_init",          "lr_final",
                                           "seed",       "stages",     "channels",         "res_blocks",
                                           "checkpoint_every", "crop_size", "content_leakage", "clip_grad_norm"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown training config key '" + key + "'");
  }
  TrainConfig c;
  read_key(j, "epochs", c.epochs);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "lr_init", c.lr_init);
  read_key(j, "lr_final", c.lr_final);
  read_key(j, "seed", c.seed);
  read_key(j, "stages", c.stages);
  read_key(j, "channels", c.channels);
  read_key(j, "res_blocks", c.res_blocks);
  read_key(j, "checkpoint_every", c.checkpoint_every);
  if (j.contains("crop_size") && !j.at("crop_size").is_null()) {
    int size = 0;
    read_key(j, "crop_size", size);
    c.crop_size = size;
  }
  read_key(j, "content_leakage", c.content_leakage);
  read_key(j, "clip_grad_norm", c.clip_grad_norm);
  c.validate();
  return c;
}

TrainState TrainState::fresh(const TrainConfig& cfg) {
  cfg.validate();
  TrainState s;
  s.seed = cfg.seed;
  s.weights = PhatnetWeights::init(cfg.network(), cfg.seed);
  return s;
}

long steps_per_epoch(std::size_t pairs, int batch_size) {
  return static_cast<long>((pairs + static_cast<std::size_t>(batch_size) - 1) / static_cast<std::size_t>(batch_size));
}

long total_steps(const TrainConfig& cfg, std::size_t pairs) {
  return static_cast<long>(cfg.epochs) * steps_per_epoch(pairs, cfg.batch_size);
}

std::vector<StepSample> samples_for_step(const std::vector<ImagePair>& data, const TrainConfig& cfg, long step) {
  const std::size_t n = data.size();
  if (n < 2) throw ConfigError("training needs at least 2 pairs, got " + std::to_string(n));
  const long spe = steps_per_epoch(n, cfg.batch_size);
  const long epoch = step / spe;
  const long within = step % spe;
  const auto order = permutation(n, mix_seed(mix_seed(cfg.seed, kPermutationStream), static_cast<std::uint64_t>(epoch)));

  std::vector<StepSample> batch;
  const std::size_t begin = static_cast<std::size_t>(within) * static_cast<std::size_t>(cfg.batch_size);
  const std::size_t end = std::min(n, begin + static_cast<std::size_t>(cfg.batch_size));
  for (std::size_t k = begin; k < end; ++k) {
    const int i = order[k];
    Rng rng(mix_seed(mix_seed(cfg.seed, kSampleStream), static_cast<std::uint64_t>(step) * 1024 + (k - begin)));
    int j = rng.below(static_cast<int>(n) - 1);
    if (j >= i) ++j;
    const Tensor& hazy = data[static_cast<std::size_t>(i)].hazy.tensor();
    const Tensor& clean = data[static_cast<std::size_t>(i)].clean.tensor();
    const Tensor& other = data[static_cast<std::size_t>(j)].clean.tensor();
    StepSample s;
    if (cfg.crop_size) {
      const int size = *cfg.crop_size;
      int top = 0;
      int left = 0;
      s.hazy = random_crop(hazy, size, rng, top, left);
      s.clean = crop(clean, top, left, size);
      s.unpaired_clean = random_crop(other, size, rng, top, left);
    } else {
      s.hazy = hazy;
      s.clean = clean;
      s.unpaired_clean = other;
    }
    batch.push_back(std::move(s));
  }
  return batch;
}

void train_step(TrainState& state, std::span<const StepSample> batch, const TrainConfig& cfg, long total) {
  if (batch.empty()) throw ConfigError("train_step: empty batch");
  const double lr = cosine_lr(state.step, total, cfg.lr_init, cfg.lr_final);
  const auto params = state.weights.params();
  nn::zero_grads(params);

  double htc_sum = 0.0;
  double cl_sum = 0.0;
  for (const auto& sample : batch) {
    require_same_shape(sample.hazy, sample.clean, "training pair");
    const MultiScaleGraph transfer_out = forward_graph(state.weights, sample.hazy, sample.clean);
    std::vector<ad::Var> terms{pyramid_l1_graph(transfer_out, sample.hazy)};
    if (cfg.content_leakage) {
      require_same_shape(sample.clean, sample.unpaired_clean, "content-leakage pair");
      const MultiScaleGraph leak_out = forward_graph(state.weights, sample.clean, sample.unpaired_clean);
      terms.push_back(pyramid_l1_graph(leak_out, sample.unpaired_clean));
    }
    const ad::Var loss = ad::sum(terms);
    const double htc = terms[0].value()[0];
    const double cl = cfg.content_leakage ? terms[1].value()[0] : 0.0;
    if (!std::isfinite(loss.value()[0])) {
      nn::zero_grads(params);
      throw DivergenceError("non-finite training loss at step " + std::to_string(state.step));
    }
    ad::backward(loss);
    htc_sum += htc;
    cl_sum += cl;
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  if (batch.size() > 1) scale_gradients(params, inv);
  if (gradient_norm(params) > 0.0 && !std::isfinite(gradient_norm(params))) {
    nn::zero_grads(params);
    throw DivergenceError("non-finite gradient at step " + std::to_string(state.step));
  }
  if (cfg.clip_grad_norm > 0.0) clip_gradients(params, cfg.clip_grad_norm);
  state.optimizer.step(params, lr);
  nn::zero_grads(params);

  LossRecord rec;
  rec.step = state.step;
  rec.lr = lr;
  rec.htc = htc_sum * inv;
  rec.cl = cl_sum * inv;
  rec.total = rec.htc + rec.cl;
  state.history.push_back(rec);
  ++state.step;
}

TrainState train(const std::vector<ImagePair>& data, const TrainConfig& cfg, std::optional<TrainState> resume,
                 const TrainOptions& options) {
  cfg.validate();
  if (data.size() < 2) throw ConfigError("training needs at least 2 pairs, got " + std::to_string(data.size()));
  if (!cfg.crop_size) {
    for (const auto& p : data) {
      require_same_shape(p.hazy.tensor(), data.front().hazy.tensor(), "training set (set crop_size for mixed sizes)");
    }
  }
  TrainState state = resume ? std::move(*resume) : TrainState::fresh(cfg);
  const long total = total_steps(cfg, data.size());
  const long stop = options.stop_at_step ? std::min(*options.stop_at_step, total) : total;

  while (state.step < stop) {
    const auto batch = samples_for_step(data, cfg, state.step);
    try {
      train_step(state, batch, cfg, total);
    } catch (const DivergenceError&) {
      if (!options.checkpoint_dir.empty()) {
        save_train_state(options.checkpoint_dir / "diverged.ckpt", state, cfg);
      }
      throw;
    }
    if (options.on_step) options.on_step(state);
    if (cfg.checkpoint_every > 0 && !options.checkpoint_dir.empty() && state.step % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "step_%08ld.ckpt", state.step);
      save_train_state(options.checkpoint_dir / name, state, cfg);
    }
  }
  return state;
}

Archive train_state_archive(const TrainState& state, const TrainConfig& cfg) {
  Archive a = phatnet_archive(state.weights, state.seed);
  for (const auto& [name, mo] : state.optimizer.moments()) {
    a.arrays["adam.m/" + name] = mo.m;
    a.arrays["adam.v/" + name] = mo.v;
  }
  if (!state.history.empty()) {
    Tensor h(1, static_cast<int>(state.history.size()), 5);
    for (std::size_t r = 0; r < state.history.size(); ++r) {
      const auto& rec = state.history[r];
      const int y = static_cast<int>(r);
      h(0, y, 0) = static_cast<double>(rec.step);
      h(0, y, 1) = rec.lr;
      h(0, y, 2) = rec.htc;
      h(0, y, 3) = rec.cl;
      h(0, y, 4) = rec.total;
    }
    a.arrays["train.history"] = std::move(h);
  }
  const auto& ac = state.optimizer.config();
  a.manifest["training"] = {{"step", state.step},
                            {"adam_steps", state.optimizer.steps_taken()},
                            {"adam", {{"beta1", ac.beta1}, {"beta2", ac.beta2}, {"eps", ac.eps}}},
                            {"rng", {{"seed", state.seed}, {"counter", state.step}}},
                            {"config", cfg.to_json()}};
  return a;
}

TrainState train_state_from_archive(const Archive& archive) {
  TrainState s;
  s.weights = phatnet_from_archive(archive);
  const auto& m = archive.manifest;
  if (!m.contains("training")) throw CheckpointError("checkpoint holds weights only, no training state");
  try {
    const auto& t = m.at("training");
    s.step = t.at("step").get<long>();
    s.seed = t.at("rng").at("seed").get<std::uint64_t>();
    AdamConfig ac;
    ac.beta1 = t.at("adam").at("beta1").get<double>();
    ac.beta2 = t.at("adam").at("beta2").get<double>();
    ac.eps = t.at("adam").at("eps").get<double>();
    s.optimizer = Adam(ac);
    s.optimizer.set_steps_taken(t.at("adam_steps").get<long>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed training state: ") + e.what());
  }
  for (const auto& [name, arr] : archive.arrays) {
    if (name.rfind("adam.m/", 0) == 0) {
      const std::string pname = name.substr(7);
      auto v = archive.arrays.find("adam.v/" + pname);
      if (v == archive.arrays.end()) throw CheckpointError("missing second moment for " + pname);
      s.optimizer.moments()[pname] = Adam::Moments{arr, v->second};
    }
  }
  if (auto it = archive.arrays.find("train.history"); it != archive.arrays.end()) {
    const Tensor& h = it->second;
    for (int y = 0; y < h.height(); ++y) {
      s.history.push_back({static_cast<long>(h(0, y, 0)), h(0, y, 1), h(0, y, 2), h(0, y, 3), h(0, y, 4)});
    }
  }
  return s;
}

void save_train_state(const std::filesystem::path& path, const TrainState& state, const TrainConfig& cfg) {
  save_archive(path, train_state_archive(state, cfg));
}

TrainState load_train_state(const std::filesystem::path& path) {
  return train_state_from_archive(load_archive(path));
}

std::string loss_history_csv(const std::vector<LossRecord>& history) {
  std::ostringstream os;
  os.precision(17);
  os << "step,lr,htc,cl,total\n";
  for (const auto& r : history) os << r.step << ',' << r.lr << ',' << r.htc << ',' << r.cl << ',' << r.total << '\n';
  return os.str();
}

}  // namespace phat
