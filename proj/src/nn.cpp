#include "phat/nn.hpp"

#include <cmath>

#include "phat/errors.hpp"

namespace phat::nn {

Conv Conv::init(int in, int out, int kernel, int stride, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel * kernel));
  Tensor w(out, in, kernel * kernel);
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  Tensor b(out, 1, 1);
  for (double& v : b.values()) v = rng.uniform(-bound, bound);
  return Conv{ad::Var(std::move(w), true), ad::Var(std::move(b), true), stride};
}

void Conv::collect(const std::string& prefix, NamedParams& out) const {
  out.emplace_back(prefix + ".weight", weight);
  out.emplace_back(prefix + ".bias", bias);
}

ResBlock ResBlock::init(int channels, Rng& rng) {
  Conv a = Conv::init(channels, channels, 3, 1, rng);
  Conv b = Conv::init(channels, channels, 3, 1, rng);
  return ResBlock{std::move(a), std::move(b)};
}

ad::Var ResBlock::operator()(const ad::Var& x) const {
  return ad::add(x, second(ad::leaky_relu(first(x), kLeakySlope)));
}

void ResBlock::collect(const std::string& prefix, NamedParams& out) const {
  first.collect(prefix + ".conv0", out);
  second.collect(prefix + ".conv1", out);
}

Encoder Encoder::init(int in_channels, const std::vector<int>& widths, int res_blocks, Rng& rng) {
  Encoder enc;
  int in = in_channels;
  for (int width : widths) {
    DownStage stage{Conv::init(in, width, 3, 2, rng), {}};
    for (int r = 0; r < res_blocks; ++r) stage.blocks.push_back(ResBlock::init(width, rng));
    enc.stages.push_back(std::move(stage));
    in = width;
  }
  return enc;
}

ad::Var Encoder::operator()(const ad::Var& x) const {
  ad::Var h = x;
  for (const auto& stage : stages) {
    h = ad::leaky_relu(stage.down(h), kLeakySlope);
    for (const auto& block : stage.blocks) h = block(h);
  }
  return h;
}

void Encoder::collect(const std::string& prefix, NamedParams& out) const {
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string p = prefix + ".down" + std::to_string(s);
    stages[s].down.collect(p + ".conv", out);
    for (std::size_t r = 0; r < stages[s].blocks.size(); ++r) {
      stages[s].blocks[r].collect(p + ".res" + std::to_string(r), out);
    }
  }
}

Decoder Decoder::init(const std::vector<int>& widths, int res_blocks, int out_channels, Rng& rng) {
  Decoder dec;
  for (std::size_t s = 0; s < widths.size(); ++s) {
    UpStage stage;
    for (int r = 0; r < res_blocks; ++r) stage.blocks.push_back(ResBlock::init(widths[s], rng));
    const int next = s + 1 < widths.size() ? widths[s + 1] : widths.back();
    stage.up = Conv::init(widths[s], next, 3, 1, rng);
    dec.stages.push_back(std::move(stage));
  }
  dec.head = Conv::init(widths.back(), out_channels, 3, 1, rng);
  return dec;
}

ad::Var Decoder::operator()(const ad::Var& x) const {
  ad::Var h = x;
  for (const auto& stage : stages) {
    for (const auto& block : stage.blocks) h = block(h);
    h = ad::leaky_relu(stage.up(ad::upsample2_nearest(h)), kLeakySlope);
  }
  return head(h);
}

void Decoder::collect(const std::string& prefix, NamedParams& out) const {
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string p = prefix + ".up" + std::to_string(s);
    for (std::size_t r = 0; r < stages[s].blocks.size(); ++r) {
      stages[s].blocks[r].collect(p + ".res" + std::to_string(r), out);
    }
    stages[s].up.collect(p + ".conv", out);
  }
  head.collect(prefix + ".head", out);
}

std::size_t parameter_count(const NamedParams& params) {
  std::size_t n = 0;
  for (const auto& [name, var] : params) n += var.value().size();
  return n;
}

void zero_all(const NamedParams& params) {
  for (auto [name, var] : params) var.mutable_value().fill(0.0);
}

void zero_grads(const NamedParams& params) {
  for (auto [name, var] : params) var.zero_grad();
}

void copy_values(const NamedParams& from, const NamedParams& to) {
  if (from.size() != to.size()) throw DimensionError("copy_values: parameter count mismatch");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i].first != to[i].first) {
      throw DimensionError("copy_values: " + from[i].first + " vs " + to[i].first);
    }
    ad::Var dst = to[i].second;
    require_same_shape(from[i].second.value(), dst.value(), "copy_values");
    dst.mutable_value() = from[i].second.value();
  }
}

}  // namespace phat::nn
