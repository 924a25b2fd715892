#include "phat/losses.hpp"

#include <cmath>

#include "phat/errors.hpp"

namespace phat {

double l1_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "l1 loss");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  if constexpr (kL1Reduction == L1Reduction::kMean) s /= static_cast<double>(a.size());
  return s;
}

LossValue pyramid_l1(const MultiScaleOutput& out, const Tensor& reference) {
  if (out.outputs.empty()) throw DimensionError("loss: empty multi-scale output");
  const auto refs = image_pyramid(reference, static_cast<int>(out.outputs.size()));
  LossValue v;
  for (std::size_t s = 0; s < refs.size(); ++s) {
    v.per_scale.push_back(l1_distance(out.outputs[s], refs[s]));
    v.total += v.per_scale.back();
  }
  return v;
}

LossValue htc_loss(const MultiScaleOutput& out, const ImageTensor& hazy_ref) {
  return pyramid_l1(out, hazy_ref.tensor());
}

LossValue cl_loss(const MultiScaleOutput& out, const ImageTensor& clean_ref) {
  return pyramid_l1(out, clean_ref.tensor());
}

double total_loss(const LossValue& htc, const LossValue& cl) { return htc.total + cl.total; }

ad::Var pyramid_l1_graph(const MultiScaleGraph& out, const Tensor& reference,
                         std::vector<ad::Var>* per_scale) {
  if (out.outputs.empty()) throw DimensionError("loss: empty multi-scale output");
  const auto refs = image_pyramid(reference, static_cast<int>(out.outputs.size()));
  std::vector<ad::Var> terms;
  for (std::size_t s = 0; s < refs.size(); ++s) {
    ad::Var term = ad::mean_abs_diff(out.outputs[s], refs[s]);
    if constexpr (kL1Reduction == L1Reduction::kSum) {
      term = ad::scale(term, static_cast<double>(refs[s].size()));
    }
    terms.push_back(term);
  }
  if (per_scale) *per_scale = terms;
  return ad::sum(terms);
}

}  // namespace phat
