#pragma once

#include <functional>
#include <string>

#include "phat/autodiff.hpp"

namespace phat {

// Parametric edit applied to the latent transmission features before
// fusion: gamma correction changes haze density, a vertical flip moves the
// haze pattern.
struct TmEdit {
  enum class Kind { kNone, kGamma, kVFlip };
  Kind kind = Kind::kNone;
  double gamma = 1.0;

  static TmEdit none() { return {}; }
  // Throws ParameterError for gamma <= 0.
  static TmEdit gamma_correction(double gamma);
  static TmEdit vflip() { return {Kind::kVFlip, 1.0}; }

  // "none", "vflip", "gamma0.7" ...; also the file-name tag.
  std::string tag() const;
  // Inverse of tag(); accepts "gamma:0.7" as well.
  static TmEdit parse(const std::string& text);

  friend bool operator==(const TmEdit& a, const TmEdit& b) {
    return a.kind == b.kind && (a.kind != Kind::kGamma || a.gamma == b.gamma);
  }
};

Tensor apply_tm_edit(const Tensor& ftm, const TmEdit& edit);
ad::Var apply_tm_edit(const ad::Var& ftm, const TmEdit& edit);

// Receives the exact tensors entering each stage's latent fusion (after the
// edit). Stage 0 is the finest.
using FusionObserver =
    std::function<void(int stage, const Tensor& content, const Tensor& transmission, const Tensor& airlight)>;

}  // namespace phat
