#include "phat/phatnet.hpp"

#include "phat/errors.hpp"

namespace phat {

void PhatnetConfig::validate() const {
  if (stages < 1 || stages > 6) throw ConfigError("stage count must be in [1, 6]");
  phdt.validate();
}

PhatnetWeights PhatnetWeights::init(const PhatnetConfig& config, std::uint64_t seed) {
  config.validate();
  PhatnetWeights w;
  w.config = config;
  for (int s = 0; s < config.stages; ++s) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(s)));
    w.stages.push_back(PhdtWeights::init(config.phdt, rng));
  }
  return w;
}

nn::NamedParams PhatnetWeights::params() const {
  nn::NamedParams out;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    stages[s].collect("stage" + std::to_string(s) + ".", out);
  }
  return out;
}

MultiScaleOutput MultiScaleGraph::values() const {
  MultiScaleOutput out;
  for (const auto& v : outputs) out.outputs.push_back(v.value());
  return out;
}

std::vector<Tensor> image_pyramid(const Tensor& image, int levels) {
  std::vector<Tensor> out{image};
  for (int s = 1; s < levels; ++s) out.push_back(downsample2(out.back()));
  return out;
}

MultiScaleGraph forward_graph(const PhatnetWeights& w, const Tensor& hazy, const Tensor& clean,
                              const TmEdit& edit, const FusionObserver* observer) {
  require_same_shape(hazy, clean, "PHATNet forward");
  const int stages = static_cast<int>(w.stages.size());
  require_resolution(hazy.height(), hazy.width(), w.config.resolution_multiple(), "PHATNet forward");

  const auto hazy_levels = image_pyramid(hazy, stages);
  const auto clean_levels = image_pyramid(clean, stages);

  MultiScaleGraph out;
  out.outputs.resize(stages);
  for (int s = stages - 1; s >= 0; --s) {
    ad::Var pred = phdt_graph(w.stages[s], ad::constant(hazy_levels[s]), ad::constant(clean_levels[s]),
                              edit, observer, s);
    if (s + 1 < stages) pred = ad::add(pred, ad::upsample2_bilinear(out.outputs[s + 1]));
    out.outputs[s] = pred;
  }
  return out;
}

MultiScaleOutput forward(const ImageTensor& hazy, const ImageTensor& clean, const PhatnetWeights& w,
                         const TmEdit& edit, const FusionObserver* observer) {
  ad::NoGradGuard guard;
  MultiScaleOutput out = forward_graph(w, hazy.tensor(), clean.tensor(), edit, observer).values();
  for (const auto& t : out.outputs) require_finite(t, "PHATNet output");
  return out;
}

ImageTensor transfer(const ImageTensor& hazy, const ImageTensor& clean, const PhatnetWeights& w,
                     const TmEdit& edit) {
  return ImageTensor(forward(hazy, clean, w, edit).outputs.front());
}

}  // namespace phat
