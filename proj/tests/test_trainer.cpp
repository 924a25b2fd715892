#include <doctest.h>

#include <set>

#include "phat/errors.hpp"
#include "phat/losses.hpp"
#include "phat/trainer.hpp"
#include "test_util.hpp"

using namespace phat;

namespace {

std::vector<ImagePair> tiny_data(int n, int size, std::uint64_t seed) {
  std::vector<ImagePair> out;
  for (int k = 0; k < n; ++k) {
    ImageTensor clean = testutil::random_image(size, size, seed + 2 * k);
    Tensor hazy = clean.tensor();
    for (double& v : hazy.values()) v = 0.6 * v + 0.4 * 0.85;
    out.push_back({ImageTensor(hazy), clean});
  }
  return out;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.epochs = 2;
  c.lr_init = 1e-3;
  c.lr_final = 1e-5;
  c.seed = 17;
  c.stages = 2;
  c.channels = 8;
  c.res_blocks = 1;
  return c;
}

bool same_weights(const PhatnetWeights& a, const PhatnetWeights& b) {
  const auto pa = a.params();
  const auto pb = b.params();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].first != pb[i].first || !(pa[i].second.value() == pb[i].second.value())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("config validation and json round trip") {
  TrainConfig c = tiny_config();
  c.crop_size = 16;
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(TrainConfig::from_json({{"epochs", 1}, {"learning_rate", 0.1}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json({{"epochs", "ten"}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json({{"crop_size", 20}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json({{"lr_init", 1e-5}, {"lr_final", 1e-3}}), ConfigError);
  CHECK(TrainConfig::from_json(nlohmann::json::object()).epochs == 200);
}

TEST_CASE("step bookkeeping") {
  CHECK(steps_per_epoch(20, 1) == 20);
  CHECK(steps_per_epoch(20, 3) == 7);
  TrainConfig c = tiny_config();
  c.batch_size = 2;
  CHECK(total_steps(c, 5) == 6);
}

TEST_CASE("sampling covers each pair once per epoch with j != i") {
  const auto data = tiny_data(5, 16, 1);
  TrainConfig c = tiny_config();
  c.stages = 1;
  for (long epoch = 0; epoch < 3; ++epoch) {
    std::set<int> seen;
    for (long s = epoch * 5; s < epoch * 5 + 5; ++s) {
      const auto batch = samples_for_step(data, c, s);
      REQUIRE(batch.size() == 1);
      int i = -1;
      int j = -1;
      for (int k = 0; k < 5; ++k) {
        if (batch[0].hazy == data[static_cast<std::size_t>(k)].hazy.tensor()) i = k;
        if (batch[0].unpaired_clean == data[static_cast<std::size_t>(k)].clean.tensor()) j = k;
      }
      REQUIRE(i >= 0);
      REQUIRE(j >= 0);
      CHECK(i != j);
      CHECK(batch[0].clean == data[static_cast<std::size_t>(i)].clean.tensor());
      seen.insert(i);
    }
    CHECK(seen.size() == 5);
  }
  CHECK_THROWS_AS(samples_for_step(tiny_data(1, 16, 1), c, 0), ConfigError);
}

TEST_CASE("crops are aligned between hazy and clean") {
  const auto data = tiny_data(3, 32, 5);
  TrainConfig c = tiny_config();
  c.stages = 1;
  c.crop_size = 16;
  const auto batch = samples_for_step(data, c, 4);
  CHECK(batch[0].hazy.height() == 16);
  bool found = false;
  for (const auto& p : data) {
    for (int top = 0; top <= 16 && !found; ++top) {
      for (int left = 0; left <= 16 && !found; ++left) {
        if (crop(p.hazy.tensor(), top, left, 16) == batch[0].hazy) {
          found = crop(p.clean.tensor(), top, left, 16) == batch[0].clean;
        }
      }
    }
  }
  CHECK(found);
}

TEST_CASE("zero learning rate is a no-op") {
  const auto data = tiny_data(3, 32, 9);
  TrainConfig c = tiny_config();
  c.epochs = 1;
  c.lr_init = 0.0;
  c.lr_final = 0.0;
  const TrainState s = train(data, c);
  CHECK(s.step == 3);
  CHECK(same_weights(s.weights, PhatnetWeights::init(c.network(), c.seed)));
}

TEST_CASE("training replays bit-identically") {
  const auto data = tiny_data(3, 32, 11);
  const TrainConfig c = tiny_config();
  const TrainState a = train(data, c);
  const TrainState b = train(data, c);
  CHECK(a.step == 6);
  CHECK(same_weights(a.weights, b.weights));
  CHECK(a.history == b.history);
}

TEST_CASE("resume from a checkpoint equals the uninterrupted run") {
  const auto data = tiny_data(3, 32, 13);
  const TrainConfig c = tiny_config();
  const TrainState full = train(data, c);
  testutil::TempDir dir("resume");
  TrainOptions stop;
  stop.stop_at_step = 4;
  const TrainState partial = train(data, c, std::nullopt, stop);
  CHECK(partial.step == 4);
  save_train_state(dir.path() / "mid.ckpt", partial, c);
  const TrainState resumed = train(data, c, load_train_state(dir.path() / "mid.ckpt"));
  CHECK(resumed.step == full.step);
  CHECK(same_weights(resumed.weights, full.weights));
  CHECK(resumed.history == full.history);
  CHECK(resumed.optimizer.steps_taken() == full.optimizer.steps_taken());
}

TEST_CASE("periodic checkpoints are written") {
  const auto data = tiny_data(2, 32, 15);
  TrainConfig c = tiny_config();
  c.checkpoint_every = 2;
  testutil::TempDir dir("periodic");
  TrainOptions opts;
  opts.checkpoint_dir = dir.path();
  train(data, c, std::nullopt, opts);
  CHECK(std::filesystem::exists(dir.path() / "step_00000002.ckpt"));
  CHECK(std::filesystem::exists(dir.path() / "step_00000004.ckpt"));
  CHECK(load_train_state(dir.path() / "step_00000002.ckpt").step == 2);
}

TEST_CASE("non-finite loss raises a divergence error and leaves weights untouched") {
  const TrainConfig c = tiny_config();
  TrainState s = TrainState::fresh(c);
  const PhatnetWeights before = PhatnetWeights::init(c.network(), c.seed);
  StepSample bad{testutil::random_tensor(3, 32, 32, 1), testutil::random_tensor(3, 32, 32, 2),
                 testutil::random_tensor(3, 32, 32, 3)};
  bad.hazy[5] = std::numeric_limits<double>::quiet_NaN();
  std::vector<StepSample> batch{bad};
  CHECK_THROWS_AS(train_step(s, batch, c, 10), DivergenceError);
  CHECK(s.step == 0);
  CHECK(same_weights(s.weights, before));
}

TEST_CASE("overfitting a tiny fixture reduces the loss") {
  const auto data = tiny_data(2, 32, 21);
  TrainConfig c = tiny_config();
  c.epochs = 30;
  c.lr_init = 2e-3;
  c.lr_final = 1e-4;
  const TrainState s = train(data, c);
  double first = 0.0;
  double last = 0.0;
  for (int k = 0; k < 4; ++k) {
    first += s.history[static_cast<std::size_t>(k)].total;
    last += s.history[s.history.size() - 1 - static_cast<std::size_t>(k)].total;
  }
  CHECK(last < 0.5 * first);
}

TEST_CASE("htc-only ablation records zero content leakage") {
  const auto data = tiny_data(2, 32, 23);
  TrainConfig c = tiny_config();
  c.epochs = 1;
  c.content_leakage = false;
  const TrainState s = train(data, c);
  for (const auto& r : s.history) {
    CHECK(r.cl == 0.0);
    CHECK(r.total == r.htc);
  }
}

TEST_CASE("loss history csv") {
  std::vector<LossRecord> h{{0, 1e-3, 0.5, 0.25, 0.75}};
  const std::string csv = loss_history_csv(h);
  CHECK(csv.rfind("step,lr,htc,cl,total\n", 0) == 0);
  CHECK(csv.find("0,0.001") != std::string::npos);
}
