#pragma once

// Haze-transfer-consistency and content-leakage objectives.
//
// Both compare each scale of a multi-scale prediction with the matching
// level of a bilinear pyramid of a full-resolution reference and sum the
// per-scale L1 distances. The L1 term is reduced by the mean over elements
// (kL1Reduction) so magnitudes do not depend on image size.

#include <vector>

#include "phat/autodiff.hpp"
#include "phat/image.hpp"
#include "phat/phatnet.hpp"

namespace phat {

enum class L1Reduction { kMean, kSum };
inline constexpr L1Reduction kL1Reduction = L1Reduction::kMean;

struct LossValue {
  double total = 0.0;
  std::vector<double> per_scale;
};

double l1_distance(const Tensor& a, const Tensor& b);

// Per-scale L1 between `out` and the pyramid of `reference`.
LossValue pyramid_l1(const MultiScaleOutput& out, const Tensor& reference);

// PHATNet(hazy_i, clean_i) against hazy_i.
LossValue htc_loss(const MultiScaleOutput& out, const ImageTensor& hazy_ref);
// PHATNet(clean_i, clean_j) against clean_j.
LossValue cl_loss(const MultiScaleOutput& out, const ImageTensor& clean_ref);
double total_loss(const LossValue& htc, const LossValue& cl);

// Differentiable counterpart of pyramid_l1; returns the summed scalar and
// fills `per_scale` with the per-scale terms when given.
ad::Var pyramid_l1_graph(const MultiScaleGraph& out, const Tensor& reference,
                         std::vector<ad::Var>* per_scale = nullptr);

}  // namespace phat
