#pragma once

// Small baseline dehazing network: a U-shaped encoder-decoder with additive
// skip connections and a residual output head,
//   dehaze(x) = clamp(x + net(x)).

#include <cstdint>
#include <vector>

#include "phat/image.hpp"
#include "phat/nn.hpp"

namespace phat {

struct DehazerConfig {
  int depth = 2;  // downsampling steps; depth + 1 resolution levels
  int base_channels = 16;
  int res_blocks = 1;

  void validate() const;
  int resolution_multiple() const { return 1 << depth; }
};

struct DehazerWeights {
  DehazerConfig config;
  nn::Conv stem;
  std::vector<nn::ResBlock> stem_blocks;
  std::vector<nn::Conv> downs;  // level l -> l+1, stride 2
  std::vector<std::vector<nn::ResBlock>> down_blocks;
  std::vector<nn::Conv> ups;  // level l+1 -> l after nearest x2
  std::vector<std::vector<nn::ResBlock>> up_blocks;
  nn::Conv head;

  static DehazerWeights init(const DehazerConfig& config, std::uint64_t seed);
  nn::NamedParams params() const;
  // Deep copy with fresh parameter nodes.
  DehazerWeights clone() const;
};

// Unclamped prediction x + net(x); the training loss is taken on this.
ad::Var dehazer_graph(const DehazerWeights& w, const ad::Var& hazy);

ImageTensor dehaze(const ImageTensor& hazy, const DehazerWeights& w);

}  // namespace phat
