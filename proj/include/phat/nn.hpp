#pragma once

// Convolutional building blocks shared by the haze-transfer network and the
// baseline dehazer.

#include <string>
#include <utility>
#include <vector>

#include "phat/autodiff.hpp"
#include "phat/random.hpp"

namespace phat::nn {

inline constexpr double kLeakySlope = 0.2;

using NamedParams = std::vector<std::pair<std::string, ad::Var>>;

struct Conv {
  ad::Var weight;  // out x in x k*k
  ad::Var bias;    // out x 1 x 1
  int stride = 1;

  // Fan-in scaled uniform init, bound 1/sqrt(in*k*k), for weight and bias.
  static Conv init(int in, int out, int kernel, int stride, Rng& rng);

  int in_channels() const { return weight.value().height(); }
  int out_channels() const { return weight.value().channels(); }
  ad::Var operator()(const ad::Var& x) const { return ad::conv2d(x, weight, bias, stride); }
  void collect(const std::string& prefix, NamedParams& out) const;
};

// x + conv(leaky(conv(x)))
struct ResBlock {
  Conv first;
  Conv second;

  static ResBlock init(int channels, Rng& rng);
  ad::Var operator()(const ad::Var& x) const;
  void collect(const std::string& prefix, NamedParams& out) const;
};

// Stride-2 convolution followed by residual blocks at the reduced size.
struct DownStage {
  Conv down;
  std::vector<ResBlock> blocks;
};

// Three stride-2 stages: H x W x 3 -> H/8 x W/8 x widths.back().
struct Encoder {
  std::vector<DownStage> stages;

  static Encoder init(int in_channels, const std::vector<int>& widths, int res_blocks, Rng& rng);
  ad::Var operator()(const ad::Var& x) const;
  int out_channels() const { return stages.back().down.out_channels(); }
  void collect(const std::string& prefix, NamedParams& out) const;
};

// Residual blocks, then nearest x2 upsampling and a convolution.
struct UpStage {
  std::vector<ResBlock> blocks;
  Conv up;
};

// Mirror of Encoder: h x w x C -> 8h x 8w x out_channels.
struct Decoder {
  std::vector<UpStage> stages;
  Conv head;

  // `widths` lists the channel count entering each up stage, coarsest first.
  static Decoder init(const std::vector<int>& widths, int res_blocks, int out_channels, Rng& rng);
  ad::Var operator()(const ad::Var& x) const;
  void collect(const std::string& prefix, NamedParams& out) const;
};

// Total number of scalar parameters.
std::size_t parameter_count(const NamedParams& params);
void zero_all(const NamedParams& params);
void zero_grads(const NamedParams& params);
// Copies values by name; throws DimensionError on any name or shape mismatch.
void copy_values(const NamedParams& from, const NamedParams& to);

}  // namespace phat::nn
