#pragma once

// Multi-scale haze transfer network: S PHDT blocks composed coarse to fine.
//
//   out[S-1] = PHDT(hazy[S-1], clean[S-1])
//   out[s]   = PHDT(hazy[s], clean[s]) + UP(out[s+1])
//
// where index 0 is the full resolution, each coarser level is a bilinear x1/2
// downsample, and UP is bilinear x2.

#include <vector>

#include "phat/image.hpp"
#include "phat/phdt.hpp"

namespace phat {

struct PhatnetConfig {
  int stages = 3;
  PhdtConfig phdt;

  void validate() const;
  // H and W must be divisible by 2^(stages-1) * 8.
  int resolution_multiple() const { return (1 << (stages - 1)) * 8; }
};

struct PhatnetWeights {
  PhatnetConfig config;
  std::vector<PhdtWeights> stages;  // finest first, no sharing

  static PhatnetWeights init(const PhatnetConfig& config, std::uint64_t seed);
  // Parameter names are prefixed "stage<k>.".
  nn::NamedParams params() const;
};

// Unclamped per-scale predictions, finest first.
struct MultiScaleOutput {
  std::vector<Tensor> outputs;
};

struct MultiScaleGraph {
  std::vector<ad::Var> outputs;
  MultiScaleOutput values() const;
};

// Bilinear pyramid of `image`, finest (the image itself) first.
std::vector<Tensor> image_pyramid(const Tensor& image, int levels);

MultiScaleGraph forward_graph(const PhatnetWeights& w, const Tensor& hazy, const Tensor& clean,
                              const TmEdit& edit = {}, const FusionObserver* observer = nullptr);

MultiScaleOutput forward(const ImageTensor& hazy, const ImageTensor& clean, const PhatnetWeights& w,
                         const TmEdit& edit = {}, const FusionObserver* observer = nullptr);

// Finest output of forward(), clamped to [0,1].
ImageTensor transfer(const ImageTensor& hazy, const ImageTensor& clean, const PhatnetWeights& w,
                     const TmEdit& edit = {});

}  // namespace phat
