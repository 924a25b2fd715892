#pragma once

// Parametric haze disentanglement and transfer block.
//
// Two encoders read haze from the hazy input: the atmospheric-light encoder
// (a global C-vector) and the transmission encoder (an H/8 x W/8 x C map).
// Both end in exp(-relu(.)), so every element lies in (0,1]. A content
// encoder reads the clean input; the three are fused with the scattering
// model in latent space and decoded back to an image by the rehazing
// decoder.

#include <vector>

#include "phat/autodiff.hpp"
#include "phat/image.hpp"
#include "phat/nn.hpp"
#include "phat/random.hpp"
#include "phat/tm_edit.hpp"

namespace phat {

struct PhdtConfig {
  int channels = 32;
  int res_blocks = 2;

  // Encoder stage widths, finest first: C/4, C/2, C (at least 4).
  std::vector<int> widths() const;
  void validate() const;
};

// h x w x C latent map. Stored channels-first.
class LatentFeatures {
 public:
  LatentFeatures() = default;
  explicit LatentFeatures(Tensor data) : data_(std::move(data)) {}
  const Tensor& tensor() const { return data_; }
  int channels() const { return data_.channels(); }
  int height() const { return data_.height(); }
  int width() const { return data_.width(); }

 private:
  Tensor data_;
};

// C-vector with every element in (0,1]. Stored as C x 1 x 1.
class AtmosphericLightVector {
 public:
  AtmosphericLightVector() = default;
  // Throws ParameterError when an element is outside (0,1].
  explicit AtmosphericLightVector(Tensor data);
  const Tensor& tensor() const { return data_; }
  int size() const { return data_.channels(); }
  double operator[](int c) const { return data_[static_cast<std::size_t>(c)]; }

 private:
  Tensor data_;
};

struct PhdtWeights {
  PhdtConfig config;
  nn::Encoder ale;
  nn::Encoder tme;
  nn::Encoder ce;
  nn::Decoder re;

  static PhdtWeights init(const PhdtConfig& config, Rng& rng);
  void collect(const std::string& prefix, nn::NamedParams& out) const;
  nn::NamedParams params() const;
};

// Differentiable graph pieces. Inputs are 3 x H x W variables.
ad::Var atmospheric_light_graph(const PhdtWeights& w, const ad::Var& hazy);
ad::Var transmission_graph(const PhdtWeights& w, const ad::Var& hazy);
ad::Var content_graph(const PhdtWeights& w, const ad::Var& clean);
// F^J * F^TM + F^AL * (1 - F^TM), with F^AL broadcast over positions.
ad::Var fuse_graph(const ad::Var& content, const ad::Var& transmission, const ad::Var& airlight);
ad::Var rehaze_graph(const PhdtWeights& w, const ad::Var& fused);
// Full block. `edit` is applied to F^TM before fusion; `observer` (if set)
// sees the fusion inputs tagged with `stage`.
ad::Var phdt_graph(const PhdtWeights& w, const ad::Var& hazy, const ad::Var& clean,
                   const TmEdit& edit = {}, const FusionObserver* observer = nullptr, int stage = 0);

// Inference entry points (no gradient recording). Non-finite activations
// raise DivergenceError.
AtmosphericLightVector encode_atmospheric_light(const ImageTensor& hazy, const PhdtWeights& w);
LatentFeatures encode_transmission(const ImageTensor& hazy, const PhdtWeights& w);
LatentFeatures encode_content(const ImageTensor& clean, const PhdtWeights& w);
LatentFeatures fuse_asm_latent(const LatentFeatures& content, const LatentFeatures& transmission,
                               const AtmosphericLightVector& airlight);
// 8h x 8w x 3, unclamped.
Tensor rehaze_decode(const LatentFeatures& fused, const PhdtWeights& w);
// Unclamped 3 x H x W prediction.
Tensor phdt_forward(const ImageTensor& hazy, const ImageTensor& clean, const PhdtWeights& w);

void require_finite(const Tensor& t, const char* what);

}  // namespace phat
