#include "phat/dehazer.hpp"

#include <algorithm>

#include "phat/errors.hpp"
#include "phat/phdt.hpp"
#include "phat/random.hpp"

namespace phat {

void DehazerConfig::validate() const {
  if (depth < 0 || depth > 6) throw ConfigError("dehazer depth must be in [0, 6]");
  if (base_channels < 1) throw ConfigError("dehazer base channels must be >= 1");
  if (res_blocks < 0) throw ConfigError("dehazer residual block count must be >= 0");
}

DehazerWeights DehazerWeights::init(const DehazerConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  DehazerWeights w;
  w.config = config;
  auto width = [&](int level) { return config.base_channels << level; };
  auto blocks = [&](int channels) {
    std::vector<nn::ResBlock> out;
    for (int r = 0; r < config.res_blocks; ++r) out.push_back(nn::ResBlock::init(channels, rng));
    return out;
  };
  w.stem = nn::Conv::init(3, width(0), 3, 1, rng);
  w.stem_blocks = blocks(width(0));
  for (int l = 0; l < config.depth; ++l) {
    w.downs.push_back(nn::Conv::init(width(l), width(l + 1), 3, 2, rng));
    w.down_blocks.push_back(blocks(width(l + 1)));
  }
  for (int l = 0; l < config.depth; ++l) {
    w.ups.push_back(nn::Conv::init(width(l + 1), width(l), 3, 1, rng));
    w.up_blocks.push_back(blocks(width(l)));
  }
  w.head = nn::Conv::init(width(0), 3, 3, 1, rng);
  return w;
}

nn::NamedParams DehazerWeights::params() const {
  nn::NamedParams out;
  stem.collect("stem", out);
  for (std::size_t r = 0; r < stem_blocks.size(); ++r) stem_blocks[r].collect("stem.res" + std::to_string(r), out);
  for (std::size_t l = 0; l < downs.size(); ++l) {
    const std::string p = "down" + std::to_string(l);
    downs[l].collect(p + ".conv", out);
    for (std::size_t r = 0; r < down_blocks[l].size(); ++r) down_blocks[l][r].collect(p + ".res" + std::to_string(r), out);
  }
  for (std::size_t l = 0; l < ups.size(); ++l) {
    const std::string p = "up" + std::to_string(l);
    ups[l].collect(p + ".conv", out);
    for (std::size_t r = 0; r < up_blocks[l].size(); ++r) up_blocks[l][r].collect(p + ".res" + std::to_string(r), out);
  }
  head.collect("head", out);
  return out;
}

DehazerWeights DehazerWeights::clone() const {
  DehazerWeights copy = init(config, 0);
  nn::copy_values(params(), copy.params());
  return copy;
}

ad::Var dehazer_graph(const DehazerWeights& w, const ad::Var& hazy) {
  const Tensor& x = hazy.value();
  require_resolution(x.height(), x.width(), std::max(w.config.resolution_multiple(), 8), "dehaze");
  auto run_blocks = [](ad::Var h, const std::vector<nn::ResBlock>& blocks) {
    for (const auto& b : blocks) h = b(h);
    return h;
  };
  std::vector<ad::Var> skips;
  ad::Var h = run_blocks(ad::leaky_relu(w.stem(hazy), nn::kLeakySlope), w.stem_blocks);
  skips.push_back(h);
  for (std::size_t l = 0; l < w.downs.size(); ++l) {
    h = run_blocks(ad::leaky_relu(w.downs[l](h), nn::kLeakySlope), w.down_blocks[l]);
    skips.push_back(h);
  }
  for (int l = static_cast<int>(w.ups.size()) - 1; l >= 0; --l) {
    h = ad::add(ad::leaky_relu(w.ups[l](ad::upsample2_nearest(h)), nn::kLeakySlope), skips[l]);
    h = run_blocks(h, w.up_blocks[l]);
  }
  return ad::add(hazy, w.head(h));
}

ImageTensor dehaze(const ImageTensor& hazy, const DehazerWeights& w) {
  ad::NoGradGuard guard;
  Tensor out = dehazer_graph(w, ad::constant(hazy.tensor())).value();
  require_finite(out, "dehazer output");
  return ImageTensor(std::move(out));
}

}  // namespace phat
