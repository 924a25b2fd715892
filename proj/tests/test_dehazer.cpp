#include <doctest.h>

#include "phat/datagen.hpp"
#include "phat/dehazer.hpp"
#include "phat/dehazer_train.hpp"
#include "phat/errors.hpp"
#include "phat/model_io.hpp"
#include "test_util.hpp"

using namespace phat;

namespace {

DehazerConfig tiny() { return {2, 8, 1}; }

std::vector<ImagePair> small_pairs(int n, int size) {
  DomainSpec spec;
  spec.seed = 21;
  spec.size = 32;
  spec.pair_count = n;
  std::vector<ImagePair> out;
  for (auto& p : generate_domain(spec)) {
    out.push_back({ImageTensor(crop(p.hazy.tensor(), 0, 0, size)), ImageTensor(crop(p.clean.tensor(), 0, 0, size))});
  }
  return out;
}

}  // namespace

TEST_CASE("zero weights give the identity") {
  DehazerWeights w = DehazerWeights::init(tiny(), 1);
  nn::zero_all(w.params());
  const ImageTensor x = testutil::random_image(16, 24, 2);
  CHECK(dehaze(x, w) == x);
}

TEST_CASE("shape is preserved and resolution is enforced") {
  const DehazerWeights w = DehazerWeights::init(tiny(), 1);
  const ImageTensor x = testutil::random_image(16, 32, 3);
  const ImageTensor y = dehaze(x, w);
  CHECK(y.height() == 16);
  CHECK(y.width() == 32);
  for (double v : y.tensor().values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(dehaze(testutil::random_image(18, 16, 3), w), DimensionError);
  CHECK_THROWS_AS(DehazerWeights::init({-1, 8, 1}, 1), ConfigError);
}

TEST_CASE("init is deterministic and clone is independent") {
  const DehazerWeights a = DehazerWeights::init(tiny(), 9);
  const DehazerWeights b = DehazerWeights::init(tiny(), 9);
  const ImageTensor x = testutil::random_image(16, 16, 4);
  CHECK(dehaze(x, a) == dehaze(x, b));
  DehazerWeights c = a.clone();
  nn::zero_all(c.params());
  CHECK(dehaze(x, a) == dehaze(x, b));
  CHECK(dehaze(x, c) == x);
}

TEST_CASE("zero learning rate leaves weights unchanged") {
  const auto pairs = small_pairs(3, 16);
  DehazerWeights w = DehazerWeights::init(tiny(), 2);
  const DehazerWeights before = w.clone();
  PairSource src{pairs.size(), [&](std::size_t k) { return pairs[k]; }};
  const auto hist = fit_supervised(w, src, {2, 2, 0.0, 0.0, 5, std::nullopt});
  CHECK(hist.size() == 4);
  const auto pa = w.params();
  const auto pb = before.params();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].second.value() == pb[i].second.value());
}

TEST_CASE("training is deterministic and reduces the loss") {
  const auto pairs = small_pairs(4, 32);
  DehazerTrainConfig cfg;
  cfg.epochs = 15;
  cfg.lr_init = 2e-3;
  cfg.lr_final = 1e-4;
  cfg.seed = 4;
  cfg.network = tiny();
  std::vector<SupervisedStep> h1, h2;
  const DehazerWeights a = train_dehazer(pairs, cfg, &h1);
  const DehazerWeights b = train_dehazer(pairs, cfg, &h2);
  REQUIRE(h1.size() == 60);
  for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1[i].loss == h2[i].loss);
  CHECK(dehaze(pairs[0].hazy, a) == dehaze(pairs[0].hazy, b));
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 4; ++i) {
    first += h1[static_cast<std::size_t>(i)].loss;
    last += h1[h1.size() - 1 - static_cast<std::size_t>(i)].loss;
  }
  CHECK(last < 0.7 * first);
  const DehazeScore trained = score_dehazer(a, pairs);
  DehazerWeights ident = DehazerWeights::init(tiny(), 1);
  nn::zero_all(ident.params());
  CHECK(trained.psnr_db > score_dehazer(ident, pairs).psnr_db);
}

TEST_CASE("train config JSON is strict") {
  DehazerTrainConfig cfg;
  cfg.crop_size = 64;
  const auto back = DehazerTrainConfig::from_json(cfg.to_json());
  CHECK(back.crop_size == 64);
  CHECK(back.epochs == cfg.epochs);
  auto j = cfg.to_json();
  j["bogus"] = 1;
  CHECK_THROWS_AS(DehazerTrainConfig::from_json(j), ConfigError);
  DehazerTrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
